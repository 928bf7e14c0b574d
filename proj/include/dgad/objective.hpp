#pragma once

#include "dgad/params.hpp"
#include "dgad/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace dgad {

/// Which class the hypersphere loss pulls toward the centre.
enum class Orientation {
    /// Labeled anomalies are pulled to x = 0, everything labeled normal is pushed
    /// out; anomaly score exp(-|x|^2).
    AsWritten,
    /// Normals are pulled to x = 0, anomalies pushed out; score 1 - exp(-|x|^2).
    Ruff,
};

std::string to_string(Orientation o);
Orientation orientation_from_string(const std::string& s);

inline constexpr double kDistanceFloor = 1e-8;
inline constexpr double kSimilarityEps = 1e-7;

/// f_o: 2d -> d -> d readout, f_p: d -> d -> d projector (ReLU between).
struct HeadParams {
    Tensor fo_w1, fo_b1, fo_w2, fo_b2;
    Tensor fp_w1, fp_b1, fp_w2, fp_b2;

    static HeadParams create(std::size_t hidden, const std::string& prefix, std::uint64_t seed,
                             ParameterStore& params);
};

/// h = f_o(concat(z[src], z[dst])) as a [1 x d] row.
Tensor readout(const Tensor& z, std::size_t src, std::size_t dst, const HeadParams& heads);
Tensor project(const Tensor& h, const HeadParams& heads);

struct PairRepresentation {
    Tensor h_ego;
    Tensor h_ctx;

    /// x = h_ego - h_ctx
    Tensor difference() const { return sub(h_ego, h_ctx); }
};

/// Hypersphere loss on a representation x with r = max(|x|^2, 1e-8):
/// as written, y r - (1 - y) log(1 - e^-r); Ruff swaps y and 1 - y.
Tensor echsc_loss(const Tensor& x, int y, Orientation orientation);
Tensor echsc_loss(const PairRepresentation& pair, int y, Orientation orientation);

/// S(a, b) = clamp((cos(a, b) + 1) / 2, eps, 1 - eps);
/// loss = -log S(ego, ctx) - log(1 - S(ego, neg)).
Tensor ecc_loss(const Tensor& p_ego, const Tensor& p_ctx, const Tensor& p_neg);

/// Score from r = |x|^2: exp(-r) (as written) or 1 - exp(-r) (Ruff).
double anomaly_score(const Tensor& x, Orientation orientation);
double anomaly_score(const PairRepresentation& pair, Orientation orientation);

struct LossItem {
    PairRepresentation pair;
    bool labeled = false;
    int y = 0;  // meaningful only when labeled
};

struct LossOptions {
    double lambda = 0.01;
    Orientation orientation = Orientation::AsWritten;
    /// Restrict the hypersphere term to labeled edges.
    bool labeled_only = false;
    /// When false the hypersphere term sees h_ego alone instead of h_ego - h_ctx.
    bool ego_context = true;
};

struct LossBreakdown {
    Tensor total;
    double echsc_mean = 0.0;
    double ecc_mean = 0.0;
    std::size_t echsc_terms = 0;
    std::size_t ecc_terms = 0;
};

/// mean(hypersphere terms) + lambda * mean(contrastive terms). Unlabeled edges
/// enter the hypersphere term with y = 0 unless `labeled_only`. Item i's
/// contrastive negative is the context of item (i + 1) mod B; a batch of one
/// has no contrastive term.
LossBreakdown total_loss(std::span<const LossItem> batch, const HeadParams& heads,
                         const LossOptions& options);

}  // namespace dgad
