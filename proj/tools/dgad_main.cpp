// dgad: command-line front end (inject, train, evaluate, export-embeddings, sweep, synth).

#include "dgad/config.hpp"
#include "dgad/dataset.hpp"
#include "dgad/evaluation.hpp"
#include "dgad/inject.hpp"
#include "dgad/pipeline.hpp"
#include "dgad/synthetic.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace fs = std::filesystem;
using namespace dgad;

namespace {

// Configuration error: exit status 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> sets;
    std::string output;
    long long seed = -1;
    long long labels = -1;
    long long workers = -1;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "key = value config file");
    cmd->add_option("--set", o.sets, "override one key (key=value), repeatable");
    cmd->add_option("--output", o.output, "run directory (output.dir)");
    cmd->add_option("--seed", o.seed, "training seed");
    cmd->add_option("--labels", o.labels, "labeled anomalies (labels.anomalies)");
    cmd->add_option("--workers", o.workers, "forward-pass threads");
}

ConfigEntries collect(const CommonOptions& o, ConfigEntries base = {}) {
    ConfigEntries e = std::move(base);
    if (!o.config_path.empty()) {
        for (auto& kv : read_config_file(o.config_path)) e.push_back(std::move(kv));
    }
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
        e.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!o.output.empty()) e.emplace_back("output.dir", o.output);
    if (o.seed >= 0) e.emplace_back("seed", std::to_string(o.seed));
    if (o.labels >= 0) e.emplace_back("labels.anomalies", std::to_string(o.labels));
    if (o.workers >= 0) e.emplace_back("workers", std::to_string(o.workers));
    return e;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void log_epoch(const EpochRecord& r) {
    std::fprintf(stderr, "epoch %zu  loss %.6f  val_auc %.4f  (%.1fs)\n", r.epoch, r.train_loss, r.val_auc,
                 r.seconds);
}

EvaluationResult train_and_evaluate(const ExperimentConfig& cfg, const PreparedData& data, bool quiet) {
    const auto start = std::chrono::steady_clock::now();
    Model model = build_model(cfg, data);
    TrainingRun run;
    run.labels = select_labels(data.store(), data.splits.train, {cfg.label_budget, cfg.label_seed});
    TrainOptions opts = cfg.train_options();
    if (!quiet) opts.on_epoch = log_epoch;
    run.result = fit(model, data.store(), data.splits, run.labels, opts);
    const fs::path dir = cfg.output_dir;
    write_training_run(dir, cfg, model, run);
    write_timing(dir / run_files::timing, "train", seconds_since(start));
    EvaluationResult res = evaluate(model, data.store(), data.splits.test, cfg.eval_seed, cfg.workers);
    write_metrics(make_metrics(cfg, "test", res), dir / "metrics_test.json");
    return res;
}

int cmd_train(const CommonOptions& o, bool also_evaluate) {
    const ExperimentConfig cfg = build_config(collect(o));
    const auto start = std::chrono::steady_clock::now();
    const PreparedData data = prepare_data(cfg);
    Model model = build_model(cfg, data);
    TrainingRun run;
    run.labels = select_labels(data.store(), data.splits.train, {cfg.label_budget, cfg.label_seed});
    TrainOptions opts = cfg.train_options();
    opts.on_epoch = log_epoch;
    run.result = fit(model, data.store(), data.splits, run.labels, opts);
    const fs::path dir = cfg.output_dir;
    write_training_run(dir, cfg, model, run);
    write_node_map(data.graph.node_names, dir / run_files::node_map);
    write_timing(dir / run_files::timing, "train", seconds_since(start));
    std::printf("trained %zu epochs, best epoch %zu (val_auc %.4f); run directory %s\n",
                run.result.log.size(), run.result.best_epoch, run.result.best_val_auc, dir.c_str());
    if (also_evaluate) {
        const EvaluationResult res =
            evaluate(model, data.store(), data.splits.test, cfg.eval_seed, cfg.workers);
        write_metrics(make_metrics(cfg, "test", res), dir / "metrics_test.json");
        std::printf("test auc %.6f\n", res.auc);
    }
    return 0;
}

struct LoadedRun {
    ExperimentConfig config;
    fs::path dir;
    fs::path checkpoint;
};

LoadedRun resolve_run(const CommonOptions& o, const std::string& run_dir, const std::string& checkpoint) {
    LoadedRun r;
    if (!checkpoint.empty()) {
        r.checkpoint = checkpoint;
        r.dir = run_dir.empty() ? fs::path(checkpoint).parent_path() : fs::path(run_dir);
    } else if (!run_dir.empty()) {
        r.dir = run_dir;
        r.checkpoint = r.dir / run_files::checkpoint;
    } else {
        throw UsageError("need --run or --checkpoint");
    }
    ConfigEntries base;
    const fs::path snapshot = r.dir / run_files::config;
    if (fs::exists(snapshot)) base = read_config_file(snapshot);
    else if (o.config_path.empty()) throw UsageError("no config snapshot in " + r.dir.string() + "; pass --config");
    ConfigEntries entries = collect(o, std::move(base));
    if (o.output.empty()) entries.emplace_back("output.dir", r.dir.string());
    r.config = build_config(entries);
    return r;
}

int cmd_evaluate(const CommonOptions& o, const std::string& run_dir, const std::string& checkpoint,
                 const std::string& split, const std::string& out) {
    const LoadedRun r = resolve_run(o, run_dir, checkpoint);
    const auto start = std::chrono::steady_clock::now();
    const PreparedData data = prepare_data(r.config);
    Model model = build_model(r.config, data);
    model.load(r.checkpoint);
    const EvaluationResult res =
        evaluate(model, data.store(), split_by_name(data.splits, split), r.config.eval_seed, r.config.workers);
    const fs::path dest = out.empty() ? fs::path(r.config.output_dir) / ("metrics_" + split + ".json") : fs::path(out);
    if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
    write_metrics(make_metrics(r.config, split, res), dest);
    write_timing(dest.parent_path() / run_files::timing, "evaluate_" + split, seconds_since(start));
    std::printf("%s auc %.6f (%zu anomalies, %zu normals); metrics %s\n", split.c_str(), res.auc, res.positives,
                res.negatives, dest.c_str());
    return 0;
}

int cmd_export(const CommonOptions& o, const std::string& run_dir, const std::string& checkpoint,
               const std::string& split, const std::string& out) {
    const LoadedRun r = resolve_run(o, run_dir, checkpoint);
    const PreparedData data = prepare_data(r.config);
    Model model = build_model(r.config, data);
    model.load(r.checkpoint);
    const fs::path dest =
        out.empty() ? fs::path(r.config.output_dir) / ("embeddings_" + split + ".tsv") : fs::path(out);
    if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
    export_embeddings(model, data.store(), split_by_name(data.splits, split), dest, r.config.eval_seed);
    std::printf("wrote %s\n", dest.c_str());
    return 0;
}

int cmd_inject(const CommonOptions& o, const std::string& out, const std::string& clusters_out) {
    ExperimentConfig cfg = build_config(collect(o));
    if (cfg.data_path.empty()) throw UsageError("config: data.path is not set");
    LoadedGraph g = load_dataset(cfg.data_path, cfg.data_format);
    InjectionResult inj = inject_anomalies(g.store, cfg.inject_rate, cfg.inject_k, cfg.inject_seed);
    write_labeled_edges(inj.store, out);
    write_node_map(g.node_names, fs::path(out).string() + ".nodes");
    if (!clusters_out.empty()) write_cluster_tsv(inj.clusters, clusters_out);
    std::printf("injected %zu anomalies into %zu edges; wrote %s\n", inj.injected_ids.size(),
                g.store.num_edges(), out.c_str());
    return 0;
}

std::vector<std::string> split_values(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int cmd_sweep(const CommonOptions& o, const std::string& param, const std::string& values) {
    std::string key;
    std::vector<std::string> points;
    if (param == "lambda") {
        key = "loss.lambda";
        points = split_values(values, ',');
    } else if (param == "fanouts") {
        key = "model.fanouts";
        points = split_values(values, ';');
    } else {
        throw UsageError("--param must be lambda or fanouts");
    }
    if (points.empty()) throw UsageError("--values is empty");
    const ConfigEntries base = collect(o);
    const ExperimentConfig base_cfg = build_config(base);
    std::vector<ExperimentConfig> configs;
    for (const auto& v : points) {
        ConfigEntries e = base;
        e.emplace_back(key, v);
        std::string tag = v;
        for (char& c : tag) {
            if (c == ',') c = '-';
        }
        e.emplace_back("output.dir", (fs::path(base_cfg.output_dir) / (param + "=" + tag)).string());
        configs.push_back(build_config(e));
    }
    const PreparedData data = prepare_data(base_cfg);
    fs::create_directories(base_cfg.output_dir);
    std::ofstream summary(fs::path(base_cfg.output_dir) / "sweep.tsv");
    if (!summary) throw std::runtime_error("cannot write " + (fs::path(base_cfg.output_dir) / "sweep.tsv").string());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        fs::create_directories(configs[i].output_dir);
        const EvaluationResult res = train_and_evaluate(configs[i], data, true);
        summary << param << '\t' << points[i] << '\t' << res.auc << '\n';
        std::printf("%s=%s test auc %.6f\n", param.c_str(), points[i].c_str(), res.auc);
    }
    return 0;
}

int cmd_synth(const std::string& kind, const std::string& out, std::uint64_t seed, std::size_t nodes,
              std::size_t edges, double rate) {
    CommunityStreamOptions o;
    o.seed = seed;
    o.nodes = nodes;
    o.target_edges = edges;
    o.synchronized = kind == "rhythm";
    const EventStore base = generate_community_stream(o);
    EventStore labeled;
    if (kind == "community") labeled = inject_anomalies(base, rate, o.periods.size(), mix64(seed, 7)).store;
    else if (kind == "rhythm") labeled = inject_offbeat_repeats(base, o.periods, rate, mix64(seed, 7));
    else throw UsageError("--kind must be community or rhythm");
    write_labeled_edges(labeled, out);
    std::printf("wrote %zu edges to %s\n", labeled.num_edges(), out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-supervised edge anomaly detection on continuous-time dynamic graphs"};
    app.require_subcommand(1);

    CommonOptions train_o, eval_o, export_o, inject_o, sweep_o;
    bool train_eval = false;
    auto* train = app.add_subcommand("train", "train a model and write a run directory");
    add_common(train, train_o);
    train->add_flag("--evaluate", train_eval, "also score the test split");

    std::string run_dir, checkpoint, split = "test", out;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score a split with a trained checkpoint");
    add_common(evaluate_cmd, eval_o);
    evaluate_cmd->add_option("--run", run_dir, "run directory");
    evaluate_cmd->add_option("--checkpoint", checkpoint, "checkpoint file");
    evaluate_cmd->add_option("--split", split, "train, val or test");
    evaluate_cmd->add_option("--out", out, "metrics file");

    auto* export_cmd = app.add_subcommand("export-embeddings", "write per-edge ego-context differences");
    add_common(export_cmd, export_o);
    export_cmd->add_option("--run", run_dir, "run directory");
    export_cmd->add_option("--checkpoint", checkpoint, "checkpoint file");
    export_cmd->add_option("--split", split, "train, val or test");
    export_cmd->add_option("--out", out, "TSV file");

    std::string clusters_out;
    auto* inject_cmd = app.add_subcommand("inject", "inject cross-cluster anomalies into an unlabeled dataset");
    add_common(inject_cmd, inject_o);
    inject_cmd->add_option("--out", out, "labeled edge file")->required();
    inject_cmd->add_option("--clusters", clusters_out, "cluster assignment TSV");

    std::string param, values;
    auto* sweep = app.add_subcommand("sweep", "train and evaluate over a lambda or fan-out grid");
    add_common(sweep, sweep_o);
    sweep->add_option("--param", param, "lambda or fanouts")->required();
    sweep->add_option("--values", values, "lambda: a,b,c   fanouts: 25,10,5;10,5")->required();

    std::string kind = "community";
    std::uint64_t synth_seed = 0;
    std::size_t nodes = 500, edges = 2000;
    double rate = 0.03;
    auto* synth = app.add_subcommand("synth", "generate a labeled synthetic community stream");
    synth->add_option("--kind", kind, "community (cross-cluster anomalies) or rhythm (off-beat repeats)");
    synth->add_option("--out", out, "labeled edge file")->required();
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--nodes", nodes, "node count");
    synth->add_option("--edges", edges, "approximate edge count");
    synth->add_option("--rate", rate, "anomaly rate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "dgad: error: %s\n", e.what());
        return 1;
    }

    try {
        if (*train) return cmd_train(train_o, train_eval);
        if (*evaluate_cmd) return cmd_evaluate(eval_o, run_dir, checkpoint, split, out);
        if (*export_cmd) return cmd_export(export_o, run_dir, checkpoint, split, out);
        if (*inject_cmd) return cmd_inject(inject_o, out, clusters_out);
        if (*sweep) return cmd_sweep(sweep_o, param, values);
        if (*synth) return cmd_synth(kind, out, synth_seed, nodes, edges, rate);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "dgad: error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "dgad: error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "dgad: error: %s\n", e.what());
        return 2;
    }
    return 1;
}
