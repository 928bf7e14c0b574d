#include "dgad/objective.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace dgad {

std::string to_string(Orientation o) {
    return o == Orientation::AsWritten ? "as-written" : "ruff";
}

Orientation orientation_from_string(const std::string& s) {
    if (s == "as-written") return Orientation::AsWritten;
    if (s == "ruff") return Orientation::Ruff;
    throw std::invalid_argument("unknown orientation '" + s + "' (expected as-written or ruff)");
}

HeadParams HeadParams::create(std::size_t hidden, const std::string& prefix, std::uint64_t seed,
                              ParameterStore& params) {
    std::mt19937_64 rng(seed);
    const std::size_t d = hidden;
    HeadParams h;
    h.fo_w1 = params.add_glorot(prefix + "f_o.w1", 2 * d, d, rng);
    h.fo_b1 = params.add_zeros(prefix + "f_o.b1", 1, d);
    h.fo_w2 = params.add_glorot(prefix + "f_o.w2", d, d, rng);
    h.fo_b2 = params.add_zeros(prefix + "f_o.b2", 1, d);
    h.fp_w1 = params.add_glorot(prefix + "f_p.w1", d, d, rng);
    h.fp_b1 = params.add_zeros(prefix + "f_p.b1", 1, d);
    h.fp_w2 = params.add_glorot(prefix + "f_p.w2", d, d, rng);
    h.fp_b2 = params.add_zeros(prefix + "f_p.b2", 1, d);
    return h;
}

Tensor readout(const Tensor& z, std::size_t src, std::size_t dst, const HeadParams& heads) {
    if (src >= z.rows() || dst >= z.rows()) {
        throw std::out_of_range("readout: endpoint rows (" + std::to_string(src) + ", " +
                                std::to_string(dst) + ") out of range for " + z.shape_str());
    }
    const std::size_t s[1] = {src};
    const std::size_t d[1] = {dst};
    const Tensor parts[2] = {gather_rows(z, s), gather_rows(z, d)};
    const Tensor x = concat_cols(parts);
    const Tensor h = relu(add(matmul(x, heads.fo_w1), heads.fo_b1));
    return add(matmul(h, heads.fo_w2), heads.fo_b2);
}

Tensor project(const Tensor& h, const HeadParams& heads) {
    const Tensor a = relu(add(matmul(h, heads.fp_w1), heads.fp_b1));
    return add(matmul(a, heads.fp_w2), heads.fp_b2);
}

Tensor echsc_loss(const Tensor& x, int y, Orientation orientation) {
    if (y != 0 && y != 1) throw std::invalid_argument("echsc_loss: label must be 0 or 1");
    for (double v : x.data()) {
        if (!std::isfinite(v)) throw std::domain_error("echsc_loss: non-finite representation");
    }
    const Tensor r = clamp(squared_norm(x), kDistanceFloor, std::numeric_limits<double>::infinity());
    const int pulled = orientation == Orientation::AsWritten ? y : 1 - y;
    if (pulled == 1) return r;
    // -log(1 - e^-r) evaluated as -log(-expm1(-r)).
    return neg(log(neg(expm1(neg(r)))));
}

Tensor echsc_loss(const PairRepresentation& pair, int y, Orientation orientation) {
    return echsc_loss(pair.difference(), y, orientation);
}

namespace {

Tensor similarity(const Tensor& a, const Tensor& b) {
    const Tensor s = scale(add_scalar(cosine_similarity(a, b), 1.0), 0.5);
    return clamp(s, kSimilarityEps, 1.0 - kSimilarityEps);
}

}  // namespace

Tensor ecc_loss(const Tensor& p_ego, const Tensor& p_ctx, const Tensor& p_neg) {
    const Tensor pos = neg(log(similarity(p_ego, p_ctx)));
    const Tensor negative = neg(log(add_scalar(neg(similarity(p_ego, p_neg)), 1.0)));
    return add(pos, negative);
}

double anomaly_score(const Tensor& x, Orientation orientation) {
    double r = 0.0;
    for (double v : x.data()) r += v * v;
    const double inside = std::exp(-r);
    return orientation == Orientation::AsWritten ? inside : 1.0 - inside;
}

double anomaly_score(const PairRepresentation& pair, Orientation orientation) {
    NoGradGuard guard;
    return anomaly_score(pair.difference(), orientation);
}

LossBreakdown total_loss(std::span<const LossItem> batch, const HeadParams& heads,
                         const LossOptions& options) {
    if (batch.empty()) throw std::invalid_argument("total_loss: empty batch");
    if (options.lambda < 0.0) throw std::invalid_argument("total_loss: negative lambda");
    LossBreakdown out;

    std::vector<Tensor> hsc;
    for (const auto& item : batch) {
        if (options.labeled_only && !item.labeled) continue;
        const int y = item.labeled ? item.y : 0;
        const Tensor x = options.ego_context ? item.pair.difference() : item.pair.h_ego;
        hsc.push_back(echsc_loss(x, y, options.orientation));
    }
    out.echsc_terms = hsc.size();
    Tensor total;
    if (!hsc.empty()) {
        total = mean(concat_rows(hsc));
        out.echsc_mean = total.item();
    }

    if (options.lambda > 0.0 && batch.size() > 1) {
        std::vector<Tensor> ego, ctx;
        ego.reserve(batch.size());
        ctx.reserve(batch.size());
        for (const auto& item : batch) {
            ego.push_back(project(item.pair.h_ego, heads));
            ctx.push_back(project(item.pair.h_ctx, heads));
        }
        std::vector<Tensor> terms;
        terms.reserve(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            terms.push_back(ecc_loss(ego[i], ctx[i], ctx[(i + 1) % batch.size()]));
        }
        out.ecc_terms = terms.size();
        const Tensor ecc = mean(concat_rows(terms));
        out.ecc_mean = ecc.item();
        const Tensor weighted = scale(ecc, options.lambda);
        total = total.defined() ? add(total, weighted) : weighted;
    }
    if (!total.defined()) total = Tensor::scalar(0.0);
    out.total = total;
    return out;
}

}  // namespace dgad
