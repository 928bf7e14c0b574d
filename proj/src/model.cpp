#include "dgad/model.hpp"

#include <stdexcept>

namespace dgad {

ModelConfig apply_ablations(const AblationFlags& flags, ModelConfig config) {
    config.ablations = flags;
    if (flags.no_local_mha) config.encoder.use_local_mha = false;
    if (flags.no_global_mha) config.encoder.use_global_mha = false;
    if (flags.no_time_embed) config.encoder.use_time_embedding = false;
    if (flags.no_ecc) config.lambda = 0.0;
    return config;
}

Model::Model(const ModelConfig& config, std::uint64_t seed)
    : config_(apply_ablations(config.ablations, config)) {
    if (config_.lambda < 0.0) throw std::invalid_argument("model: lambda must be non-negative");
    ego_ = GraphEncoder(config_.encoder, "ego.", mix64(seed, 1), params_);
    ctx_ = GraphEncoder(config_.encoder, "ctx.", mix64(seed, 2), params_);
    heads_ = HeadParams::create(config_.encoder.hidden, "head.", mix64(seed, 3), params_);
}

PairRepresentation Model::represent(const SampledSubgraph& ego, const SampledSubgraph& ctx,
                                    const EventStore& store) const {
    const EncoderInputs ego_in = prepare_inputs(ego, store, config_.encoder, time_scale_);
    const EncoderInputs ctx_in = prepare_inputs(ctx, store, config_.encoder, time_scale_);
    const Tensor z_ego = ego_.encode(ego_in);
    const Tensor z_ctx = ctx_.encode(ctx_in);
    return {readout(z_ego, ego_in.src, ego_in.dst, heads_),
            readout(z_ctx, ctx_in.src, ctx_in.dst, heads_)};
}

PairRepresentation Model::represent(const EventStore& store, std::size_t ordinal,
                                    std::uint64_t sample_seed) const {
    const SampledSubgraph ego = sample_subgraph(store, ordinal, config_.sampler, true, sample_seed);
    const SampledSubgraph ctx = sample_subgraph(store, ordinal, config_.sampler, false, sample_seed);
    return represent(ego, ctx, store);
}

Tensor Model::loss_input(const PairRepresentation& pair) const {
    return config_.ablations.no_ego_context ? pair.h_ego : pair.difference();
}

double Model::score(const PairRepresentation& pair) const {
    NoGradGuard guard;
    return anomaly_score(loss_input(pair), config_.orientation);
}

LossOptions Model::loss_options() const {
    LossOptions o;
    o.lambda = config_.lambda;
    o.orientation = config_.orientation;
    o.labeled_only = config_.labeled_only_echsc;
    o.ego_context = !config_.ablations.no_ego_context;
    return o;
}

void Model::save(const std::filesystem::path& path) const {
    params_.save(path, {{"time_scale", time_scale_}});
}

void Model::load(const std::filesystem::path& path) {
    const auto meta = params_.load(path);
    if (auto it = meta.find("time_scale"); it != meta.end()) time_scale_ = it->second;
}

}  // namespace dgad
