#pragma once

#include "dgad/model.hpp"
#include "dgad/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dgad {

/// Every experiment knob. Text form is flat "key = value" lines; see
/// `config_keys()` for the schema.
struct ExperimentConfig {
    std::string dataset = "custom";  // uci, digg, wikipedia, reddit, synthetic, custom
    std::string data_path;
    std::string data_format = "edgelist";  // edgelist, jodie, labeled

    bool inject = false;
    double inject_rate = 0.03;
    std::size_t inject_k = 30;
    std::uint64_t inject_seed = 0;

    SplitSpec split;
    std::size_t label_budget = 1;
    std::uint64_t label_seed = 0;

    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t hidden = 128;
    std::size_t time_dim = 128;
    std::vector<std::size_t> fanouts{25, 10, 5};
    bool shared_endpoint_budget = false;
    QueryMode query_mode = QueryMode::Event;

    double lr = 1e-4;
    std::size_t epochs = 20;
    std::size_t batch_size = 200;
    double lambda = 0.01;
    Orientation orientation = Orientation::AsWritten;
    bool labeled_only = false;
    AblationFlags ablations;

    std::uint64_t seed = 0;
    std::uint64_t eval_seed = 0x5eed;
    std::size_t workers = 1;
    std::string output_dir = "runs/default";

    /// Throws std::invalid_argument naming the first offending key.
    void validate() const;
    ModelConfig model_config(std::size_t edge_feature_dim) const;
    TrainOptions train_options() const;
    /// Canonical text form; parsing it back yields an identical config.
    std::string to_text() const;
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Documented keys, in canonical order, with a one-line description each.
const std::vector<std::pair<std::string, std::string>>& config_keys();

/// Parses "key = value" lines; '#' starts a comment. Throws with the line number.
ConfigEntries parse_config_text(const std::string& text, const std::string& source = "<config>");
ConfigEntries read_config_file(const std::filesystem::path& path);

/// Per-dataset defaults for lr, lambda, format and injection.
ExperimentConfig defaults_for_dataset(const std::string& dataset);

/// Sets one key from its text value; unknown keys and bad values throw.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Starts from the defaults of the last "dataset" entry, then applies every
/// entry in order (later entries win) and validates.
ExperimentConfig build_config(const ConfigEntries& entries);

}  // namespace dgad
