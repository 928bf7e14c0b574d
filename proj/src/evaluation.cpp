#include "dgad/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace dgad {

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("roc_auc: " + std::to_string(scores.size()) + " scores but " +
                                    std::to_string(labels.size()) + " labels");
    }
    const std::size_t n = scores.size();
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("roc_auc: labels must be 0 or 1");
        if (!std::isfinite(scores[i])) throw std::invalid_argument("roc_auc: non-finite score");
        pos += static_cast<std::size_t>(labels[i]);
    }
    const std::size_t negs = n - pos;
    if (pos == 0 || negs == 0) {
        throw std::invalid_argument("roc_auc: need both classes (positives=" + std::to_string(pos) +
                                    ", negatives=" + std::to_string(negs) + ")");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Ranks are 1-based; ties share the mean of their rank span. Doubled to stay integral.
    long double pos_rank_sum2 = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const long double rank2 = static_cast<long double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) pos_rank_sum2 += rank2;
        }
        i = j;
    }
    const long double p = static_cast<long double>(pos);
    const long double u = pos_rank_sum2 / 2 - p * (p + 1) / 2;
    return static_cast<double>(u / (p * static_cast<long double>(negs)));
}

double roc_auc(std::span<const ScoredEdge> scored) {
    std::vector<double> s;
    std::vector<int> y;
    s.reserve(scored.size());
    y.reserve(scored.size());
    for (const auto& e : scored) {
        s.push_back(e.score);
        y.push_back(e.label);
    }
    return roc_auc(s, y);
}

EvaluationResult summarize(std::vector<ScoredEdge> scored, std::size_t skipped_unlabeled) {
    if (scored.empty()) throw std::invalid_argument("evaluate: no labeled edges to score");
    EvaluationResult r;
    r.skipped_unlabeled = skipped_unlabeled;
    double sum = 0, sum_pos = 0, sum_neg = 0;
    r.score_min = scored.front().score;
    r.score_max = scored.front().score;
    for (const auto& e : scored) {
        sum += e.score;
        r.score_min = std::min(r.score_min, e.score);
        r.score_max = std::max(r.score_max, e.score);
        if (e.label == 1) {
            ++r.positives;
            sum_pos += e.score;
        } else {
            ++r.negatives;
            sum_neg += e.score;
        }
    }
    r.score_mean = sum / static_cast<double>(scored.size());
    if (r.positives) r.score_mean_positive = sum_pos / static_cast<double>(r.positives);
    if (r.negatives) r.score_mean_negative = sum_neg / static_cast<double>(r.negatives);
    r.auc = roc_auc(scored);
    r.scored = std::move(scored);
    return r;
}

namespace {

void check_split(const EventStore& store, EdgeRange split) {
    if (split.empty()) throw std::invalid_argument("evaluate: empty split");
    if (split.end > store.num_edges()) {
        throw std::out_of_range("evaluate: split end " + std::to_string(split.end) + " beyond " +
                                std::to_string(store.num_edges()) + " edges");
    }
}

// Runs fn(i) for i in [0, n) over `workers` threads with a static stride.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

EvaluationResult evaluate(const Model& model, const EventStore& store, EdgeRange split,
                          std::uint64_t eval_seed, std::size_t workers) {
    check_split(store, split);
    std::vector<ScoredEdge> out(split.size());
    std::vector<char> keep(split.size(), 0);
    parallel_for(split.size(), workers, [&](std::size_t i) {
        NoGradGuard guard;
        const std::size_t ord = split.begin + i;
        const TemporalEdge& e = store.edge(ord);
        if (e.label == Label::Unlabeled) return;
        const PairRepresentation pair = model.represent(store, ord, mix64(eval_seed, e.id));
        out[i] = {e.id, model.score(pair), e.label == Label::Anomaly ? 1 : 0};
        keep[i] = 1;
    });
    std::vector<ScoredEdge> scored;
    scored.reserve(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (keep[i]) scored.push_back(out[i]);
    }
    const std::size_t skipped = out.size() - scored.size();
    return summarize(std::move(scored), skipped);
}

void export_embeddings(const Model& model, const EventStore& store, EdgeRange split,
                       const std::filesystem::path& path, std::uint64_t eval_seed) {
    check_split(store, split);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("export_embeddings: cannot write " + path.string());
    NoGradGuard guard;
    char buf[32];
    for (std::size_t ord = split.begin; ord < split.end; ++ord) {
        const TemporalEdge& e = store.edge(ord);
        const PairRepresentation pair = model.represent(store, ord, mix64(eval_seed, e.id));
        const Tensor x = model.loss_input(pair);
        f << e.id << '\t' << static_cast<int>(e.label);
        for (double v : x.data()) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            f << '\t' << buf;
        }
        f << '\n';
    }
    if (!f) throw std::runtime_error("export_embeddings: write failed for " + path.string());
}

void write_metrics(const MetricsRecord& record, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["dataset"] = record.dataset;
    j["split"] = record.split;
    j["label_budget"] = record.label_budget;
    j["auc"] = record.result.auc;
    j["positives"] = record.result.positives;
    j["negatives"] = record.result.negatives;
    j["skipped_unlabeled"] = record.result.skipped_unlabeled;
    j["score_mean"] = record.result.score_mean;
    j["score_min"] = record.result.score_min;
    j["score_max"] = record.result.score_max;
    j["score_mean_positive"] = record.result.score_mean_positive;
    j["score_mean_negative"] = record.result.score_mean_negative;
    j["ablations"] = record.ablations;
    j["seeds"] = record.seeds;
    for (const auto& [k, v] : record.extra) j[k] = v;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_metrics: cannot write " + path.string());
    f << j.dump(2) << '\n';
    if (!f) throw std::runtime_error("write_metrics: write failed for " + path.string());
}

}  // namespace dgad
