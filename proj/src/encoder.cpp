#include "dgad/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dgad {

void EncoderConfig::validate() const {
    if (layers == 0 || heads == 0 || hidden == 0) {
        throw std::invalid_argument("encoder: layers, heads and hidden must be positive");
    }
    if (hidden % heads != 0) {
        throw std::invalid_argument("encoder: hidden " + std::to_string(hidden) +
                                    " not divisible by heads " + std::to_string(heads));
    }
    if (time_dim == 0 || time_dim % 2 != 0) {
        throw std::invalid_argument("encoder: time_dim must be even and positive");
    }
    if (edge_feature_dim == 0 || degree_buckets == 0) {
        throw std::invalid_argument("encoder: edge_feature_dim and degree_buckets must be positive");
    }
}

std::vector<double> time_embed(double dt, std::size_t dim, double base) {
    if (!std::isfinite(dt) || dt < 0.0) {
        throw std::invalid_argument("time_embed: time gap " + std::to_string(dt) +
                                    " is negative or non-finite");
    }
    if (dim % 2 != 0) throw std::invalid_argument("time_embed: odd dimension");
    std::vector<double> out(dim);
    for (std::size_t k = 0; k < dim / 2; ++k) {
        const double w = std::pow(base, -2.0 * static_cast<double>(k) / static_cast<double>(dim));
        out[2 * k] = std::sin(dt * w);
        out[2 * k + 1] = std::cos(dt * w);
    }
    return out;
}

EncoderInputs prepare_inputs(const SampledSubgraph& graph, const EventStore& store,
                             const EncoderConfig& config, double time_scale) {
    const Incidence inc = incidence_with_self_loops(graph);
    const std::size_t m = inc.node.size();
    const std::size_t f = config.edge_feature_dim;
    EncoderInputs in;
    in.num_nodes = graph.num_nodes();
    in.src = graph.local_src();
    in.dst = graph.local_dst();
    in.inc_node = inc.node;
    in.inc_other = inc.other;

    std::vector<double> feats(m * f, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const auto* x = inc.features[r];
        if (x == nullptr) continue;
        if (x->size() > f) {
            throw std::invalid_argument("encoder: edge features of width " +
                                        std::to_string(x->size()) + " exceed configured " +
                                        std::to_string(f));
        }
        std::copy(x->begin(), x->end(), feats.begin() + r * f);
    }
    in.features = Tensor::from(m, f, std::move(feats));

    if (config.use_time_embedding) {
        std::vector<double> codes;
        codes.reserve(m * config.time_dim);
        for (double dt : inc.dt) {
            const auto phi = time_embed(dt * time_scale, config.time_dim, config.time_base);
            codes.insert(codes.end(), phi.begin(), phi.end());
        }
        in.time_codes = Tensor::from(m, config.time_dim, std::move(codes));
    }

    in.degree_bucket.reserve(graph.num_nodes());
    for (NodeId v : graph.nodes) {
        const std::size_t deg = store.degree_at(v, graph.center.t);
        in.degree_bucket.push_back(std::min(deg, config.degree_buckets - 1));
    }
    return in;
}

GraphEncoder::GraphEncoder(const EncoderConfig& config, const std::string& prefix,
                           std::uint64_t seed, ParameterStore& params)
    : config_(config) {
    config_.validate();
    std::mt19937_64 rng(seed);
    const std::size_t d = config_.hidden;
    degree_table_ = params.add_glorot(prefix + "degree_table", config_.degree_buckets, d, rng);
    const std::size_t in_dim =
        config_.edge_feature_dim + 2 * d + (config_.use_time_embedding ? config_.time_dim : 0);
    for (std::size_t l = 0; l < config_.layers; ++l) {
        const std::string p = prefix + "layer" + std::to_string(l) + ".";
        Layer L;
        L.mlp_w1 = params.add_glorot(p + "event_mlp.w1", in_dim, d, rng);
        L.mlp_b1 = params.add_zeros(p + "event_mlp.b1", 1, d);
        L.mlp_w2 = params.add_glorot(p + "event_mlp.w2", d, d, rng);
        L.mlp_b2 = params.add_zeros(p + "event_mlp.b2", 1, d);
        L.wq = params.add_glorot(p + "local.wq", d, d, rng);
        L.wk = params.add_glorot(p + "local.wk", d, d, rng);
        L.wv = params.add_glorot(p + "local.wv", d, d, rng);
        L.wo = params.add_glorot(p + "local.wo", d, d, rng);
        L.bo = params.add_zeros(p + "local.bo", 1, d);
        if (!config_.use_local_mha) L.bypass = params.add_glorot(p + "local.bypass", d, d, rng);
        if (config_.use_global_mha) {
            L.gq = params.add_glorot(p + "global.wq", d, d, rng);
            L.gk = params.add_glorot(p + "global.wk", d, d, rng);
            L.gv = params.add_glorot(p + "global.wv", d, d, rng);
            L.go = params.add_glorot(p + "global.wo", d, d, rng);
            L.gbo = params.add_zeros(p + "global.bo", 1, d);
        }
        L.ffn_w1 = params.add_glorot(p + "ffn.w1", d, 4 * d, rng);
        L.ffn_b1 = params.add_zeros(p + "ffn.b1", 1, 4 * d);
        L.ffn_w2 = params.add_glorot(p + "ffn.w2", 4 * d, d, rng);
        L.ffn_b2 = params.add_zeros(p + "ffn.b2", 1, d);
        L.ln_gamma = params.add_ones(p + "ln.gamma", 1, d);
        L.ln_beta = params.add_zeros(p + "ln.beta", 1, d);
        layers_.push_back(std::move(L));
    }
}

Tensor GraphEncoder::init_node_embeddings(const EncoderInputs& in) const {
    return gather_rows(degree_table_, in.degree_bucket);
}

Tensor GraphEncoder::event_vectors(const EncoderInputs& in, const Tensor& z_prev,
                                   std::size_t l) const {
    const Layer& L = layers_.at(l);
    std::vector<Tensor> parts{in.features, gather_rows(z_prev, in.inc_node),
                              gather_rows(z_prev, in.inc_other)};
    if (config_.use_time_embedding) parts.push_back(in.time_codes);
    const Tensor x = concat_cols(parts);
    const Tensor hidden = relu(add(matmul(x, L.mlp_w1), L.mlp_b1));
    return add(matmul(hidden, L.mlp_w2), L.mlp_b2);
}

Tensor GraphEncoder::local_mha(const EncoderInputs& in, const Tensor& z_prev, std::size_t l) const {
    if (z_prev.rows() != in.num_nodes) {
        throw std::invalid_argument("local_mha: " + std::to_string(z_prev.rows()) +
                                    " node rows for a subgraph of " +
                                    std::to_string(in.num_nodes) + " nodes");
    }
    const Layer& L = layers_.at(l);
    if (!config_.use_local_mha) return matmul(z_prev, L.bypass);

    const Tensor e = event_vectors(in, z_prev, l);
    const Tensor q = config_.query_mode == QueryMode::Event
                         ? matmul(e, L.wq)
                         : matmul(gather_rows(z_prev, in.inc_node), L.wq);
    const Tensor k = matmul(e, L.wk);
    const Tensor v = matmul(e, L.wv);
    const std::size_t dh = config_.hidden / config_.heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Tensor> heads;
    heads.reserve(config_.heads);
    for (std::size_t h = 0; h < config_.heads; ++h) {
        const Tensor qh = slice_cols(q, h * dh, dh);
        const Tensor kh = slice_cols(k, h * dh, dh);
        const Tensor vh = slice_cols(v, h * dh, dh);
        const Tensor logits = scale(rowwise_dot(qh, kh), inv_sqrt);
        // Softmax only over each node's own incident events; every other
        // position is masked out (additive -inf), never merely zeroed.
        const Tensor w = segment_softmax(logits, in.inc_node, in.num_nodes);
        heads.push_back(segment_sum(scale_rows(vh, w), in.inc_node, in.num_nodes));
    }
    return add(matmul(concat_cols(heads), L.wo), L.bo);
}

Tensor GraphEncoder::global_mha(const Tensor& z_loc, std::size_t l) const {
    const Layer& L = layers_.at(l);
    if (!config_.use_global_mha) return Tensor::zeros(z_loc.rows(), z_loc.cols());
    const Tensor q = matmul(z_loc, L.gq);
    const Tensor k = matmul(z_loc, L.gk);
    const Tensor v = matmul(z_loc, L.gv);
    const std::size_t dh = config_.hidden / config_.heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Tensor> heads;
    heads.reserve(config_.heads);
    for (std::size_t h = 0; h < config_.heads; ++h) {
        const Tensor qh = slice_cols(q, h * dh, dh);
        const Tensor kh = slice_cols(k, h * dh, dh);
        const Tensor vh = slice_cols(v, h * dh, dh);
        const Tensor att = row_softmax(scale(matmul(qh, transpose(kh)), inv_sqrt));
        heads.push_back(matmul(att, vh));
    }
    return add(matmul(concat_cols(heads), L.go), L.gbo);
}

Tensor GraphEncoder::encoder_layer(const EncoderInputs& in, const Tensor& z_prev,
                                   std::size_t l) const {
    const Layer& L = layers_.at(l);
    const Tensor z_loc = local_mha(in, z_prev, l);
    const Tensor mixed = config_.use_global_mha ? add(z_loc, global_mha(z_loc, l)) : z_loc;
    const Tensor ffn = add(matmul(relu(add(matmul(mixed, L.ffn_w1), L.ffn_b1)), L.ffn_w2), L.ffn_b2);
    return add(layer_norm(ffn, L.ln_gamma, L.ln_beta), mixed);
}

Tensor GraphEncoder::encode(const EncoderInputs& in) const {
    Tensor z = init_node_embeddings(in);
    for (std::size_t l = 0; l < config_.layers; ++l) z = encoder_layer(in, z, l);
    return z;
}

}  // namespace dgad
