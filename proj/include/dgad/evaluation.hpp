#pragma once

#include "dgad/model.hpp"
#include "dgad/tgraph.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dgad {

struct ScoredEdge {
    std::uint64_t edge_id = 0;
    double score = 0.0;
    int label = 0;
};

/// Rank-based ROC-AUC with mid-ranks for ties; equals
/// P(s_pos > s_neg) + 0.5 P(s_pos = s_neg). Throws unless both classes occur.
double roc_auc(std::span<const ScoredEdge> scored);
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct EvaluationResult {
    std::vector<ScoredEdge> scored;
    double auc = 0.0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::size_t skipped_unlabeled = 0;
    double score_mean = 0.0;
    double score_min = 0.0;
    double score_max = 0.0;
    double score_mean_positive = 0.0;
    double score_mean_negative = 0.0;
};

/// Scores every edge of `split` with the model; sampling is seeded per edge from
/// `eval_seed`, so results do not depend on `workers` or on batching. Edges with
/// no ground-truth label are skipped.
EvaluationResult evaluate(const Model& model, const EventStore& store, EdgeRange split,
                          std::uint64_t eval_seed, std::size_t workers = 1);

/// Summary over precomputed scores (AUC and score statistics).
EvaluationResult summarize(std::vector<ScoredEdge> scored, std::size_t skipped_unlabeled = 0);

/// Writes "edge_id \t label \t x_1 ... x_d" per edge of `split`, where x is the
/// hypersphere input (h_ego - h_ctx by default).
void export_embeddings(const Model& model, const EventStore& store, EdgeRange split,
                       const std::filesystem::path& path, std::uint64_t eval_seed);

/// Deterministic metrics record (no wall-clock fields).
struct MetricsRecord {
    std::string dataset;
    std::string split;
    std::size_t label_budget = 0;
    std::map<std::string, bool> ablations;
    std::map<std::string, std::uint64_t> seeds;
    std::map<std::string, double> extra;
    EvaluationResult result;
};

void write_metrics(const MetricsRecord& record, const std::filesystem::path& path);

}  // namespace dgad
