#pragma once

#include "dgad/params.hpp"
#include "dgad/tensor.hpp"
#include "dgad/tgraph.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dgad {

/// Source of the local-attention query.
enum class QueryMode {
    /// Q, K and V all project the same per-event vector (logit = Q_ij . K_ij).
    Event,
    /// Q projects the attending node's previous state only.
    Node,
};

struct EncoderConfig {
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t hidden = 128;
    std::size_t time_dim = 128;
    double time_base = 10000.0;
    std::size_t edge_feature_dim = 1;
    std::size_t degree_buckets = 256;
    bool use_local_mha = true;
    bool use_global_mha = true;
    bool use_time_embedding = true;
    QueryMode query_mode = QueryMode::Event;

    void validate() const;
};

/// Fixed sinusoidal embedding: out[2k] = sin(dt w_k), out[2k+1] = cos(dt w_k),
/// w_k = base^(-2k/dim). Throws on negative or non-finite dt, or odd dim.
std::vector<double> time_embed(double dt, std::size_t dim, double base = 10000.0);

/// Per-subgraph constants the encoder consumes: flattened incidence with
/// self-events, edge features, time encodings and causal degrees.
struct EncoderInputs {
    std::size_t num_nodes = 0;
    std::size_t src = 0;
    std::size_t dst = 0;
    std::vector<std::size_t> inc_node;
    std::vector<std::size_t> inc_other;
    Tensor features;      // [M x edge_feature_dim]
    Tensor time_codes;    // [M x time_dim]
    std::vector<std::size_t> degree_bucket;
};

/// `time_scale` multiplies raw time gaps before embedding.
EncoderInputs prepare_inputs(const SampledSubgraph& graph, const EventStore& store,
                             const EncoderConfig& config, double time_scale);

/// Continuous-time graph transformer: degree-embedded node states refined by
/// `layers` blocks of masked local attention over incident events, global
/// attention over all nodes, and z = LN(FFN(loc + glo)) + loc + glo.
class GraphEncoder {
public:
    struct Layer {
        Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;  // event MLP, shared across heads
        Tensor wq, wk, wv;                      // per-head blocks of width hidden/heads
        Tensor wo, bo;
        Tensor bypass;                          // only with use_local_mha = false
        Tensor gq, gk, gv, go, gbo;             // global attention
        Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
        Tensor ln_gamma, ln_beta;
    };

    GraphEncoder() = default;
    /// Registers parameters under `prefix` in `params`, Glorot-initialized from `seed`.
    GraphEncoder(const EncoderConfig& config, const std::string& prefix, std::uint64_t seed,
                 ParameterStore& params);

    const EncoderConfig& config() const { return config_; }
    const Layer& layer_params(std::size_t l) const { return layers_.at(l); }
    const Tensor& degree_table() const { return degree_table_; }

    Tensor init_node_embeddings(const EncoderInputs& in) const;
    /// Event-level representations e_ij = MLP(concat(x_ij, z_i, z_j, phi(dt))).
    Tensor event_vectors(const EncoderInputs& in, const Tensor& z_prev, std::size_t l) const;
    Tensor local_mha(const EncoderInputs& in, const Tensor& z_prev, std::size_t l) const;
    Tensor global_mha(const Tensor& z_loc, std::size_t l) const;
    Tensor encoder_layer(const EncoderInputs& in, const Tensor& z_prev, std::size_t l) const;
    Tensor encode(const EncoderInputs& in) const;

private:
    EncoderConfig config_;
    Tensor degree_table_;
    std::vector<Layer> layers_;
};

}  // namespace dgad
