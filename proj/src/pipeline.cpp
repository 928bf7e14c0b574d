#include "dgad/pipeline.hpp"

#include "dgad/inject.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace dgad {

PreparedData prepare_data(const ExperimentConfig& config) {
    config.validate();
    if (config.data_path.empty()) throw std::invalid_argument("config: data.path is not set");
    PreparedData d;
    d.graph = load_dataset(config.data_path, config.data_format);
    if (config.inject) {
        InjectionResult inj =
            inject_anomalies(d.graph.store, config.inject_rate, config.inject_k, config.inject_seed);
        d.injected = inj.injected_ids.size();
        d.graph.store = std::move(inj.store);
    }
    d.splits = split_chronological(d.graph.store, config.split);
    return d;
}

Model build_model(const ExperimentConfig& config, const PreparedData& data) {
    Model m(config.model_config(data.store().feature_dim()), config.seed);
    m.set_time_scale(compute_time_scale(data.store(), data.splits.train));
    return m;
}

TrainingRun train_model(const ExperimentConfig& config, const PreparedData& data, Model& model) {
    TrainingRun run;
    run.labels = select_labels(data.store(), data.splits.train, {config.label_budget, config.label_seed});
    run.result = fit(model, data.store(), data.splits, run.labels, config.train_options());
    return run;
}

EdgeRange split_by_name(const Splits& splits, const std::string& name) {
    if (name == "train") return splits.train;
    if (name == "val") return splits.val;
    if (name == "test") return splits.test;
    throw std::invalid_argument("unknown split '" + name + "' (train, val, test)");
}

MetricsRecord make_metrics(const ExperimentConfig& config, const std::string& split,
                           EvaluationResult result) {
    MetricsRecord m;
    m.dataset = config.dataset;
    m.split = split;
    m.label_budget = config.label_budget;
    m.ablations = {{"no_local_mha", config.ablations.no_local_mha},
                   {"no_global_mha", config.ablations.no_global_mha},
                   {"no_time_embed", config.ablations.no_time_embed},
                   {"no_ecc", config.ablations.no_ecc},
                   {"no_ego_context", config.ablations.no_ego_context}};
    m.seeds = {{"seed", config.seed},
               {"eval_seed", config.eval_seed},
               {"label_seed", config.label_seed},
               {"inject_seed", config.inject_seed}};
    m.extra = {{"lambda", config.lambda}};
    m.result = std::move(result);
    return m;
}

void write_training_run(const std::filesystem::path& dir, const ExperimentConfig& config,
                        const Model& model, const TrainingRun& run) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / run_files::config);
        if (!f) throw std::runtime_error("cannot write " + (dir / run_files::config).string());
        f << config.to_text();
    }
    model.save(dir / run_files::checkpoint);
    write_training_log(run.result.log, dir / run_files::log);
    std::ofstream f(dir / run_files::labels);
    if (!f) throw std::runtime_error("cannot write " + (dir / run_files::labels).string());
    f << "# edge_id\tlabel\n";
    for (auto id : run.labels.anomalies) f << id << "\t1\n";
    for (auto id : run.labels.normals) f << id << "\t0\n";
}

void write_timing(const std::filesystem::path& path, const std::string& stage, double seconds) {
    nlohmann::ordered_json j;
    if (std::ifstream in(path); in) {
        try {
            j = nlohmann::ordered_json::parse(in);
        } catch (const nlohmann::json::exception&) {
            j = nlohmann::ordered_json::object();
        }
    }
    j[stage + "_seconds"] = seconds;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << '\n';
}

}  // namespace dgad
