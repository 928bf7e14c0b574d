#pragma once

// Small model configurations and naive dense-matrix helpers used as oracles.

#include "dgad/model.hpp"

#include <cmath>
#include <vector>

namespace dgad::testing {

inline ModelConfig tiny_model_config(std::size_t feature_dim = 1) {
    ModelConfig c;
    c.encoder.layers = 2;
    c.encoder.heads = 2;
    c.encoder.hidden = 8;
    c.encoder.time_dim = 4;
    c.encoder.edge_feature_dim = feature_dim;
    c.encoder.degree_buckets = 16;
    c.sampler.fanouts = {4, 2};
    c.lambda = 0.5;
    return c;
}

using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const Tensor& t) {
    Mat m(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
    }
    return m;
}

inline Mat mat_mul(const Mat& a, const Mat& b) {
    Mat out(a.size(), std::vector<double>(b.empty() ? 0 : b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t k = 0; k < b.size(); ++k) {
            for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
        }
    }
    return out;
}

inline Mat add_row(Mat a, const Mat& bias) {
    for (auto& r : a) {
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[0][j];
    }
    return a;
}

inline Mat relu(Mat a) {
    for (auto& r : a) {
        for (double& v : r) v = v > 0 ? v : 0;
    }
    return a;
}

inline double max_abs_diff(const Mat& a, const Tensor& b) {
    double worst = 0;
    for (std::size_t r = 0; r < a.size(); ++r) {
        for (std::size_t c = 0; c < a[r].size(); ++c) worst = std::max(worst, std::abs(a[r][c] - b.at(r, c)));
    }
    return worst;
}

}  // namespace dgad::testing
