#include "dgad/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dgad {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& want) {
    throw std::invalid_argument("config: " + key + " = '" + value + "' (expected " + want + ")");
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, v, "true or false");
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a number");
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
    return static_cast<std::size_t>(to_u64(key, v));
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_size(key, trim(item)));
    if (out.empty()) bad_value(key, v, "a comma-separated list");
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(bool v) { return v ? "true" : "false"; }

}  // namespace

const std::vector<std::pair<std::string, std::string>>& config_keys() {
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"dataset", "dataset name selecting defaults: uci, digg, wikipedia, reddit, synthetic, custom"},
        {"data.path", "input file"},
        {"data.format", "edgelist, jodie or labeled"},
        {"inject.enabled", "inject cross-cluster anomalies before splitting"},
        {"inject.rate", "injected edges as a fraction of the original edge count"},
        {"inject.k", "spectral cluster count"},
        {"inject.seed", "injection seed"},
        {"split.train", "training fraction"},
        {"split.val", "validation fraction"},
        {"split.test", "test fraction"},
        {"labels.anomalies", "labeled anomalies in the training split"},
        {"labels.seed", "label selection seed"},
        {"model.layers", "encoder layers"},
        {"model.heads", "attention heads"},
        {"model.hidden", "hidden size d"},
        {"model.time_dim", "time embedding size (even)"},
        {"model.fanouts", "per-hop neighbour caps, comma-separated"},
        {"model.shared_endpoint_budget", "pool the first-hop budget of both endpoints"},
        {"model.query", "local attention query: event or node"},
        {"optim.lr", "Adam learning rate"},
        {"optim.epochs", "training epochs"},
        {"optim.batch_size", "edges per batch"},
        {"loss.lambda", "contrastive loss weight"},
        {"loss.orientation", "as-written or ruff"},
        {"loss.labeled_only", "hypersphere term on labeled edges only"},
        {"ablation.no_local_mha", "replace local attention with a linear bypass"},
        {"ablation.no_global_mha", "drop global attention"},
        {"ablation.no_time_embed", "drop the time embedding"},
        {"ablation.no_ecc", "drop the contrastive term"},
        {"ablation.no_ego_context", "score h_ego instead of h_ego - h_ctx"},
        {"seed", "training seed (initialisation, shuffling, sampling)"},
        {"eval.seed", "evaluation sampling seed"},
        {"workers", "threads for per-edge forward passes"},
        {"output.dir", "run directory"},
    };
    return keys;
}

void ExperimentConfig::validate() const {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw std::invalid_argument("config: " + msg);
    };
    need(dataset == "uci" || dataset == "digg" || dataset == "wikipedia" || dataset == "reddit" ||
             dataset == "synthetic" || dataset == "custom",
         "unknown dataset '" + dataset + "'");
    need(data_format == "edgelist" || data_format == "jodie" || data_format == "labeled",
         "data.format must be edgelist, jodie or labeled");
    need(inject_rate >= 0.0 && inject_rate < 1.0, "inject.rate must be in [0, 1)");
    need(inject_k >= 1, "inject.k must be positive");
    split.validate();
    need(label_budget >= 1, "labels.anomalies must be positive");
    need(layers >= 1 && heads >= 1 && hidden >= 1, "model dimensions must be positive");
    need(hidden % heads == 0, "model.hidden must be divisible by model.heads");
    need(time_dim >= 2 && time_dim % 2 == 0, "model.time_dim must be even and positive");
    need(!fanouts.empty(), "model.fanouts must not be empty");
    for (auto f : fanouts) need(f >= 1, "model.fanouts entries must be positive");
    need(lr > 0.0, "optim.lr must be positive");
    need(epochs >= 1, "optim.epochs must be positive");
    need(batch_size >= 1, "optim.batch_size must be positive");
    need(lambda >= 0.0, "loss.lambda must be non-negative");
    need(workers >= 1, "workers must be positive");
    need(!output_dir.empty(), "output.dir must not be empty");
}

ModelConfig ExperimentConfig::model_config(std::size_t edge_feature_dim) const {
    ModelConfig m;
    m.encoder.layers = layers;
    m.encoder.heads = heads;
    m.encoder.hidden = hidden;
    m.encoder.time_dim = time_dim;
    m.encoder.edge_feature_dim = edge_feature_dim;
    m.encoder.query_mode = query_mode;
    m.sampler.fanouts = fanouts;
    m.sampler.shared_endpoint_budget = shared_endpoint_budget;
    m.orientation = orientation;
    m.lambda = lambda;
    m.labeled_only_echsc = labeled_only;
    return apply_ablations(ablations, m);
}

TrainOptions ExperimentConfig::train_options() const {
    TrainOptions t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.lr = lr;
    t.seed = seed;
    t.eval_seed = eval_seed;
    t.workers = workers;
    return t;
}

std::string ExperimentConfig::to_text() const {
    std::string fan;
    for (std::size_t i = 0; i < fanouts.size(); ++i) fan += (i ? "," : "") + std::to_string(fanouts[i]);
    const std::vector<std::pair<std::string, std::string>> values = {
        {"dataset", dataset},
        {"data.path", data_path},
        {"data.format", data_format},
        {"inject.enabled", fmt(inject)},
        {"inject.rate", fmt(inject_rate)},
        {"inject.k", std::to_string(inject_k)},
        {"inject.seed", std::to_string(inject_seed)},
        {"split.train", fmt(split.train)},
        {"split.val", fmt(split.val)},
        {"split.test", fmt(split.test)},
        {"labels.anomalies", std::to_string(label_budget)},
        {"labels.seed", std::to_string(label_seed)},
        {"model.layers", std::to_string(layers)},
        {"model.heads", std::to_string(heads)},
        {"model.hidden", std::to_string(hidden)},
        {"model.time_dim", std::to_string(time_dim)},
        {"model.fanouts", fan},
        {"model.shared_endpoint_budget", fmt(shared_endpoint_budget)},
        {"model.query", query_mode == QueryMode::Event ? "event" : "node"},
        {"optim.lr", fmt(lr)},
        {"optim.epochs", std::to_string(epochs)},
        {"optim.batch_size", std::to_string(batch_size)},
        {"loss.lambda", fmt(lambda)},
        {"loss.orientation", to_string(orientation)},
        {"loss.labeled_only", fmt(labeled_only)},
        {"ablation.no_local_mha", fmt(ablations.no_local_mha)},
        {"ablation.no_global_mha", fmt(ablations.no_global_mha)},
        {"ablation.no_time_embed", fmt(ablations.no_time_embed)},
        {"ablation.no_ecc", fmt(ablations.no_ecc)},
        {"ablation.no_ego_context", fmt(ablations.no_ego_context)},
        {"seed", std::to_string(seed)},
        {"eval.seed", std::to_string(eval_seed)},
        {"workers", std::to_string(workers)},
        {"output.dir", output_dir},
    };
    std::string out;
    for (const auto& [k, v] : values) out += k + " = " + v + "\n";
    return out;
}

ConfigEntries parse_config_text(const std::string& text, const std::string& source) {
    ConfigEntries out;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": empty key");
        out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
    }
    return out;
}

ConfigEntries read_config_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot read config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

ExperimentConfig defaults_for_dataset(const std::string& dataset) {
    ExperimentConfig c;
    c.dataset = dataset;
    if (dataset == "uci" || dataset == "digg") {
        c.inject = true;
        c.data_format = "edgelist";
    } else if (dataset == "wikipedia") {
        c.data_format = "jodie";
        c.lr = 1e-3;
        c.lambda = 10.0;
    } else if (dataset == "reddit") {
        c.data_format = "jodie";
        c.lr = 1e-3;
    } else if (dataset == "synthetic") {
        c.data_format = "labeled";
    } else if (dataset != "custom") {
        throw std::invalid_argument("config: unknown dataset '" + dataset + "'");
    }
    return c;
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& v) {
    if (key == "dataset") c.dataset = v;
    else if (key == "data.path") c.data_path = v;
    else if (key == "data.format") c.data_format = v;
    else if (key == "inject.enabled") c.inject = to_bool(key, v);
    else if (key == "inject.rate") c.inject_rate = to_double(key, v);
    else if (key == "inject.k") c.inject_k = to_size(key, v);
    else if (key == "inject.seed") c.inject_seed = to_u64(key, v);
    else if (key == "split.train") c.split.train = to_double(key, v);
    else if (key == "split.val") c.split.val = to_double(key, v);
    else if (key == "split.test") c.split.test = to_double(key, v);
    else if (key == "labels.anomalies") c.label_budget = to_size(key, v);
    else if (key == "labels.seed") c.label_seed = to_u64(key, v);
    else if (key == "model.layers") c.layers = to_size(key, v);
    else if (key == "model.heads") c.heads = to_size(key, v);
    else if (key == "model.hidden") c.hidden = to_size(key, v);
    else if (key == "model.time_dim") c.time_dim = to_size(key, v);
    else if (key == "model.fanouts") c.fanouts = to_list(key, v);
    else if (key == "model.shared_endpoint_budget") c.shared_endpoint_budget = to_bool(key, v);
    else if (key == "model.query") {
        if (v == "event") c.query_mode = QueryMode::Event;
        else if (v == "node") c.query_mode = QueryMode::Node;
        else bad_value(key, v, "event or node");
    } else if (key == "optim.lr") c.lr = to_double(key, v);
    else if (key == "optim.epochs") c.epochs = to_size(key, v);
    else if (key == "optim.batch_size") c.batch_size = to_size(key, v);
    else if (key == "loss.lambda") c.lambda = to_double(key, v);
    else if (key == "loss.orientation") {
        try {
            c.orientation = orientation_from_string(v);
        } catch (const std::invalid_argument&) {
            bad_value(key, v, "as-written or ruff");
        }
    } else if (key == "loss.labeled_only") c.labeled_only = to_bool(key, v);
    else if (key == "ablation.no_local_mha") c.ablations.no_local_mha = to_bool(key, v);
    else if (key == "ablation.no_global_mha") c.ablations.no_global_mha = to_bool(key, v);
    else if (key == "ablation.no_time_embed") c.ablations.no_time_embed = to_bool(key, v);
    else if (key == "ablation.no_ecc") c.ablations.no_ecc = to_bool(key, v);
    else if (key == "ablation.no_ego_context") c.ablations.no_ego_context = to_bool(key, v);
    else if (key == "seed") c.seed = to_u64(key, v);
    else if (key == "eval.seed") c.eval_seed = to_u64(key, v);
    else if (key == "workers") c.workers = to_size(key, v);
    else if (key == "output.dir") c.output_dir = v;
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

ExperimentConfig build_config(const ConfigEntries& entries) {
    std::string dataset = "custom";
    for (const auto& [k, v] : entries) {
        if (k == "dataset") dataset = v;
    }
    ExperimentConfig c = defaults_for_dataset(dataset);
    for (const auto& [k, v] : entries) apply_setting(c, k, v);
    c.validate();
    return c;
}

}  // namespace dgad
