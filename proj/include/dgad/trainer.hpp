#pragma once

#include "dgad/evaluation.hpp"
#include "dgad/model.hpp"
#include "dgad/tgraph.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace dgad {

struct SplitSpec {
    double train = 0.5;
    double val = 0.2;
    double test = 0.3;

    void validate() const;
};

struct Splits {
    EdgeRange train;
    EdgeRange val;
    EdgeRange test;
};

/// Contiguous ranges over the time-sorted edges with boundaries
/// floor(train |E|) and floor((train + val) |E|); the remainder goes to test.
Splits split_chronological(const EventStore& store, const SplitSpec& spec);

struct LabelBudget {
    std::size_t n_anom = 1;
    std::uint64_t seed = 0;
};

struct LabelSelection {
    std::vector<std::uint64_t> anomalies;
    std::vector<std::uint64_t> normals;
    std::unordered_set<std::uint64_t> ids;

    bool contains(std::uint64_t id) const { return ids.count(id) != 0; }
    std::size_t size() const { return ids.size(); }
};

/// Samples n_anom anomalies and round(N_norm n_anom / N_anom) normals from the
/// training range without replacement.
LabelSelection select_labels(const EventStore& store, EdgeRange train, const LabelBudget& budget);

/// Multiplier mapping the training time span onto [0, 1000].
double compute_time_scale(const EventStore& store, EdgeRange train);

struct TrainOptions {
    std::size_t epochs = 20;
    std::size_t batch_size = 200;
    double lr = 1e-4;
    std::uint64_t seed = 0;
    std::uint64_t eval_seed = 0x5eed;
    /// Forward passes of a batch run on this many threads. Each item's graph
    /// takes creation numbers from its own block, so the backward sweep and
    /// hence the result do not depend on this value.
    std::size_t workers = 1;
    std::function<void(const struct EpochRecord&)> on_epoch;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_auc = 0.0;  // NaN when the validation split has a single class
    double seconds = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> log;
    std::size_t best_epoch = 0;
    double best_val_auc = 0.0;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch, std::size_t batch, const std::string& what);
    std::size_t epoch() const { return epoch_; }
    std::size_t batch() const { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

/// Trains on every edge of splits.train; only edges in `labels` expose their
/// ground truth to the loss. Leaves the model at the epoch with the best
/// validation AUC (the last epoch when validation AUC is undefined).
TrainResult fit(Model& model, const EventStore& store, const Splits& splits,
                const LabelSelection& labels, const TrainOptions& options);

/// One JSON object per line: epoch, train_loss, val_auc, seconds.
void write_training_log(const std::vector<EpochRecord>& log, const std::filesystem::path& path,
                        bool include_seconds = true);

}  // namespace dgad
