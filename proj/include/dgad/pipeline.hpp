#pragma once

#include "dgad/config.hpp"
#include "dgad/dataset.hpp"
#include "dgad/evaluation.hpp"
#include "dgad/model.hpp"
#include "dgad/trainer.hpp"

#include <filesystem>
#include <string>

namespace dgad {

/// Dataset after loading, optional injection and chronological splitting.
struct PreparedData {
    LoadedGraph graph;
    Splits splits;
    std::size_t injected = 0;

    const EventStore& store() const { return graph.store; }
};

PreparedData prepare_data(const ExperimentConfig& config);

/// Fresh model sized for the data, with its time scale taken from the training split.
Model build_model(const ExperimentConfig& config, const PreparedData& data);

struct TrainingRun {
    LabelSelection labels;
    TrainResult result;
};

TrainingRun train_model(const ExperimentConfig& config, const PreparedData& data, Model& model);

EdgeRange split_by_name(const Splits& splits, const std::string& name);

MetricsRecord make_metrics(const ExperimentConfig& config, const std::string& split,
                           EvaluationResult result);

/// Run-directory file names.
namespace run_files {
inline constexpr const char* config = "config.txt";
inline constexpr const char* checkpoint = "checkpoint.bin";
inline constexpr const char* log = "train_log.jsonl";
inline constexpr const char* labels = "labels.tsv";
inline constexpr const char* timing = "timing.json";
inline constexpr const char* node_map = "node_map.tsv";
}  // namespace run_files

/// Writes the config snapshot, checkpoint, training log and labeled-edge ids.
void write_training_run(const std::filesystem::path& dir, const ExperimentConfig& config,
                        const Model& model, const TrainingRun& run);

/// Wall-clock figures kept apart from the deterministic metrics.
void write_timing(const std::filesystem::path& path, const std::string& stage, double seconds);

}  // namespace dgad
