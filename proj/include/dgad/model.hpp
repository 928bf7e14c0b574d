#pragma once

#include "dgad/encoder.hpp"
#include "dgad/objective.hpp"
#include "dgad/params.hpp"
#include "dgad/tgraph.hpp"

#include <cstdint>

namespace dgad {

/// The five component switches evaluated by the ablation study.
struct AblationFlags {
    bool no_local_mha = false;
    bool no_global_mha = false;
    bool no_time_embed = false;
    bool no_ecc = false;
    bool no_ego_context = false;

    bool any() const {
        return no_local_mha || no_global_mha || no_time_embed || no_ecc || no_ego_context;
    }
};

struct ModelConfig {
    EncoderConfig encoder;
    SamplerConfig sampler;
    Orientation orientation = Orientation::AsWritten;
    double lambda = 0.01;
    bool labeled_only_echsc = false;
    AblationFlags ablations;
};

/// Applies ablation switches to a configuration: encoder components are
/// removed, lambda drops to 0 for no_ecc, and no_ego_context scores h_ego alone.
ModelConfig apply_ablations(const AblationFlags& flags, ModelConfig config);

/// Ego encoder, separately weighted context encoder, and readout/projector heads.
class Model {
public:
    Model(const ModelConfig& config, std::uint64_t seed);
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;

    const ModelConfig& config() const { return config_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }
    const GraphEncoder& ego_encoder() const { return ego_; }
    const GraphEncoder& context_encoder() const { return ctx_; }
    const HeadParams& heads() const { return heads_; }

    /// Multiplier applied to raw time gaps before the sinusoidal embedding.
    double time_scale() const { return time_scale_; }
    void set_time_scale(double s) { time_scale_ = s; }

    /// Samples ego (centre included) and context (strictly earlier) subgraphs
    /// of edge `ordinal` and reads out h_ego, h_ctx.
    PairRepresentation represent(const EventStore& store, std::size_t ordinal,
                                 std::uint64_t sample_seed) const;
    PairRepresentation represent(const SampledSubgraph& ego, const SampledSubgraph& ctx,
                                 const EventStore& store) const;

    /// x^t fed to the hypersphere loss and the score (h_ego - h_ctx, or h_ego
    /// under no_ego_context).
    Tensor loss_input(const PairRepresentation& pair) const;
    double score(const PairRepresentation& pair) const;

    LossOptions loss_options() const;

    void save(const std::filesystem::path& path) const;
    void load(const std::filesystem::path& path);

private:
    ModelConfig config_;
    ParameterStore params_;
    GraphEncoder ego_;
    GraphEncoder ctx_;
    HeadParams heads_;
    double time_scale_ = 1.0;
};

}  // namespace dgad
