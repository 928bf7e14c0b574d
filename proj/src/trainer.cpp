#include "dgad/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "json.hpp"

namespace dgad {

void SplitSpec::validate() const {
    if (!(train > 0.0) || !(val > 0.0) || !(test > 0.0)) {
        throw std::invalid_argument("split fractions must be positive");
    }
    if (std::abs(train + val + test - 1.0) > 1e-9) {
        throw std::invalid_argument("split fractions must sum to 1 (got " +
                                    std::to_string(train + val + test) + ")");
    }
}

Splits split_chronological(const EventStore& store, const SplitSpec& spec) {
    spec.validate();
    const std::size_t n = store.num_edges();
    const auto b1 = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(n) + 1e-9));
    const auto b2 =
        static_cast<std::size_t>(std::floor((spec.train + spec.val) * static_cast<double>(n) + 1e-9));
    Splits s{{0, b1}, {b1, std::min(b2, n)}, {std::min(b2, n), n}};
    if (s.train.empty() || s.val.empty() || s.test.empty()) {
        throw std::invalid_argument("split_chronological: " + std::to_string(n) +
                                    " edges leave an empty split (" + std::to_string(s.train.size()) +
                                    "/" + std::to_string(s.val.size()) + "/" +
                                    std::to_string(s.test.size()) + ")");
    }
    return s;
}

namespace {

// First `count` ids ordered by a seeded key: uniform sampling without replacement.
std::vector<std::uint64_t> pick(std::vector<std::uint64_t> ids, std::size_t count, std::uint64_t seed) {
    std::sort(ids.begin(), ids.end(), [seed](std::uint64_t a, std::uint64_t b) {
        const auto ka = mix64(seed, a), kb = mix64(seed, b);
        return ka != kb ? ka < kb : a < b;
    });
    ids.resize(count);
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace

LabelSelection select_labels(const EventStore& store, EdgeRange train, const LabelBudget& budget) {
    if (train.end > store.num_edges()) throw std::out_of_range("select_labels: range beyond store");
    if (budget.n_anom == 0) throw std::invalid_argument("select_labels: n_anom must be positive");
    std::vector<std::uint64_t> anom, norm;
    for (std::size_t i = train.begin; i < train.end; ++i) {
        const TemporalEdge& e = store.edge(i);
        if (e.label == Label::Anomaly) anom.push_back(e.id);
        else if (e.label == Label::Normal) norm.push_back(e.id);
    }
    if (anom.size() < budget.n_anom) {
        throw std::invalid_argument("select_labels: training split has " + std::to_string(anom.size()) +
                                    " anomalies, budget needs " + std::to_string(budget.n_anom));
    }
    const auto n_norm = static_cast<std::size_t>(std::llround(
        static_cast<double>(norm.size()) * static_cast<double>(budget.n_anom) /
        static_cast<double>(anom.size())));
    LabelSelection sel;
    sel.anomalies = pick(std::move(anom), budget.n_anom, mix64(budget.seed, 1));
    sel.normals = pick(std::move(norm), std::min(n_norm, norm.size()), mix64(budget.seed, 2));
    sel.ids.insert(sel.anomalies.begin(), sel.anomalies.end());
    sel.ids.insert(sel.normals.begin(), sel.normals.end());
    return sel;
}

double compute_time_scale(const EventStore& store, EdgeRange train) {
    if (train.empty()) return 1.0;
    const double span = store.edge(train.end - 1).t - store.edge(train.begin).t;
    return span > 0.0 ? 1000.0 / span : 1.0;
}

DivergenceError::DivergenceError(std::size_t epoch, std::size_t batch, const std::string& what)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch) + ": " + what),
      epoch_(epoch),
      batch_(batch) {}

namespace {

std::vector<PairRepresentation> forward_batch(const Model& model, const EventStore& store,
                                              std::span<const std::size_t> ordinals,
                                              std::uint64_t epoch_seed, std::size_t workers) {
    std::vector<PairRepresentation> reps(ordinals.size());
    const std::uint64_t first = SequenceBlock::reserve(ordinals.size());
    auto run = [&](std::size_t i) {
        const SequenceBlock block(first + i * SequenceBlock::kSize);
        const std::size_t ord = ordinals[i];
        reps[i] = model.represent(store, ord, mix64(epoch_seed, store.edge(ord).id));
    };
    workers = std::max<std::size_t>(1, std::min(workers, ordinals.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < ordinals.size(); ++i) run(i);
        return reps;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < ordinals.size(); i += workers) run(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return reps;
}

}  // namespace

TrainResult fit(Model& model, const EventStore& store, const Splits& splits,
                const LabelSelection& labels, const TrainOptions& options) {
    if (options.epochs == 0) throw std::invalid_argument("fit: epochs must be positive");
    if (options.batch_size == 0) throw std::invalid_argument("fit: batch size must be positive");
    if (splits.train.empty()) throw std::invalid_argument("fit: empty training split");
    for (std::uint64_t id : labels.ids) {
        const std::size_t ord = store.ordinal_of(id);
        if (ord < splits.train.begin || ord >= splits.train.end) {
            throw std::invalid_argument("fit: labeled edge " + std::to_string(id) +
                                        " lies outside the training split");
        }
    }

    AdamOptions adam_opts;
    adam_opts.lr = options.lr;
    Adam adam(model.params(), adam_opts);
    const LossOptions loss_opts = model.loss_options();

    TrainResult result;
    ParameterStore best;
    double best_auc = -std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(splits.train.size());
    for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const std::uint64_t epoch_seed = mix64(options.seed, epoch);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = splits.train.begin + i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto ka = mix64(epoch_seed, 0, a), kb = mix64(epoch_seed, 0, b);
            return ka != kb ? ka < kb : a < b;
        });

        double loss_sum = 0.0;
        std::size_t batch_id = 0;
        for (std::size_t lo = 0; lo < order.size(); lo += options.batch_size, ++batch_id) {
            const std::size_t hi = std::min(order.size(), lo + options.batch_size);
            const std::span<const std::size_t> ords(order.data() + lo, hi - lo);
            double value = 0.0;
            try {
                auto reps = forward_batch(model, store, ords, epoch_seed, options.workers);
                std::vector<LossItem> items(ords.size());
                for (std::size_t i = 0; i < ords.size(); ++i) {
                    const TemporalEdge& e = store.edge(ords[i]);
                    items[i].pair = std::move(reps[i]);
                    items[i].labeled = labels.contains(e.id);
                    if (items[i].labeled) items[i].y = e.label == Label::Anomaly ? 1 : 0;
                }
                const LossBreakdown loss = total_loss(items, model.heads(), loss_opts);
                value = loss.total.item();
                if (!std::isfinite(value)) throw std::domain_error("non-finite loss");
                model.params().zero_grad();
                loss.total.backward();
                adam.step();
            } catch (const std::domain_error& e) {
                throw DivergenceError(epoch, batch_id, e.what());
            }
            loss_sum += value * static_cast<double>(ords.size());
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.val_auc = std::numeric_limits<double>::quiet_NaN();
        try {
            rec.val_auc = evaluate(model, store, splits.val, options.eval_seed, options.workers).auc;
        } catch (const std::invalid_argument&) {
            // single-class or unlabeled validation split: AUC undefined
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.log.push_back(rec);
        if (options.on_epoch) options.on_epoch(rec);

        const bool defined = std::isfinite(rec.val_auc);
        if ((defined && rec.val_auc > best_auc) || (!defined && !std::isfinite(best_auc))) {
            if (defined) best_auc = rec.val_auc;
            best = model.params().clone();
            result.best_epoch = epoch;
        }
    }
    model.params().copy_values_from(best);
    result.best_val_auc = std::isfinite(best_auc) ? best_auc : std::numeric_limits<double>::quiet_NaN();
    return result;
}

void write_training_log(const std::vector<EpochRecord>& log, const std::filesystem::path& path,
                        bool include_seconds) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write training log " + path.string());
    for (const auto& r : log) {
        nlohmann::ordered_json j;
        j["epoch"] = r.epoch;
        j["train_loss"] = r.train_loss;
        if (std::isfinite(r.val_auc)) j["val_auc"] = r.val_auc;
        else j["val_auc"] = nullptr;
        if (include_seconds) j["seconds"] = r.seconds;
        f << j.dump() << '\n';
    }
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace dgad
