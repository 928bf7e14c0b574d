#include "dgad/config.hpp"
#include "dgad/dataset.hpp"
#include "dgad/evaluation.hpp"
#include "dgad/inject.hpp"
#include "dgad/model.hpp"
#include "dgad/objective.hpp"
#include "dgad/pipeline.hpp"
#include "dgad/synthetic.hpp"
#include "dgad/trainer.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <cmath>
#include <optional>

namespace py = pybind11;
using namespace dgad;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IndexArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

EventStore store_from_arrays(IndexArray src, IndexArray dst, DoubleArray t, std::optional<IndexArray> labels,
                             std::optional<DoubleArray> features, std::size_t num_nodes) {
    const auto n = static_cast<std::size_t>(src.size());
    if (static_cast<std::size_t>(dst.size()) != n || static_cast<std::size_t>(t.size()) != n) {
        throw std::invalid_argument("src, dst and t must have the same length");
    }
    if (labels && static_cast<std::size_t>(labels->size()) != n) {
        throw std::invalid_argument("labels must have one entry per edge");
    }
    std::size_t fdim = 1;
    if (features) {
        if (features->ndim() != 2 || static_cast<std::size_t>(features->shape(0)) != n) {
            throw std::invalid_argument("features must be an (edges, dim) array");
        }
        fdim = static_cast<std::size_t>(features->shape(1));
    }
    std::vector<TemporalEdge> es(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (src.at(i) < 0 || dst.at(i) < 0) throw std::invalid_argument("node ids must be non-negative");
        es[i].id = i;
        es[i].src = static_cast<NodeId>(src.at(i));
        es[i].dst = static_cast<NodeId>(dst.at(i));
        es[i].t = t.at(i);
        if (labels) {
            const auto y = labels->at(i);
            if (y < -1 || y > 1) throw std::invalid_argument("labels must be -1, 0 or 1");
            es[i].label = static_cast<Label>(y);
        }
        es[i].features.assign(fdim, 0.0);
        if (features) {
            for (std::size_t f = 0; f < fdim; ++f) es[i].features[f] = features->at(i, f);
        }
    }
    return EventStore(std::move(es), num_nodes);
}

template <class T>
py::array_t<T> to_array(const std::vector<T>& v, std::size_t cols = 0) {
    if (cols == 0) return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
    const auto rows = static_cast<py::ssize_t>(v.size() / cols);
    return py::array_t<T>({rows, static_cast<py::ssize_t>(cols)}, v.data());
}

py::dict store_arrays(const EventStore& s) {
    std::vector<std::int64_t> id, src, dst, label;
    std::vector<double> t, feats;
    for (const auto& e : s.edges()) {
        id.push_back(static_cast<std::int64_t>(e.id));
        src.push_back(static_cast<std::int64_t>(e.src));
        dst.push_back(static_cast<std::int64_t>(e.dst));
        label.push_back(static_cast<std::int64_t>(e.label));
        t.push_back(e.t);
        feats.insert(feats.end(), e.features.begin(), e.features.end());
    }
    py::dict d;
    d["id"] = to_array(id);
    d["src"] = to_array(src);
    d["dst"] = to_array(dst);
    d["t"] = to_array(t);
    d["label"] = to_array(label);
    d["features"] = to_array(feats, std::max<std::size_t>(s.feature_dim(), 1));
    return d;
}

ExperimentConfig config_from(const std::map<std::string, std::string>& settings) {
    ConfigEntries entries;
    // "dataset" selects defaults, so it goes first.
    if (auto it = settings.find("dataset"); it != settings.end()) entries.emplace_back(*it);
    for (const auto& kv : settings) {
        if (kv.first != "dataset") entries.emplace_back(kv);
    }
    return build_config(entries);
}

py::dict result_dict(const EvaluationResult& r) {
    std::vector<std::uint64_t> ids;
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& s : r.scored) {
        ids.push_back(s.edge_id);
        scores.push_back(s.score);
        labels.push_back(s.label);
    }
    py::dict d;
    d["auc"] = r.auc;
    d["positives"] = r.positives;
    d["negatives"] = r.negatives;
    d["skipped_unlabeled"] = r.skipped_unlabeled;
    d["edge_id"] = to_array(ids);
    d["score"] = to_array(scores);
    d["label"] = to_array(labels);
    return d;
}

py::list log_list(const std::vector<EpochRecord>& log) {
    py::list out;
    for (const auto& r : log) {
        py::dict d;
        d["epoch"] = r.epoch;
        d["train_loss"] = r.train_loss;
        d["val_auc"] = std::isnan(r.val_auc) ? py::object(py::none()) : py::object(py::float_(r.val_auc));
        d["seconds"] = r.seconds;
        out.append(d);
    }
    return out;
}

Tensor row_of(const std::vector<double>& v) { return Tensor::row(v); }

// Model plus the data it was built for, as handed to Python.
struct Session {
    ExperimentConfig config;
    PreparedData data;
    Model model;
    std::optional<TrainingRun> run;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Temporal edge anomaly detection: data, injection, training and evaluation";

    py::enum_<Label>(m, "Label")
        .value("UNLABELED", Label::Unlabeled)
        .value("NORMAL", Label::Normal)
        .value("ANOMALY", Label::Anomaly);

    py::class_<EventStore>(m, "EventStore")
        .def(py::init(&store_from_arrays), py::arg("src"), py::arg("dst"), py::arg("t"),
             py::arg("labels") = py::none(), py::arg("features") = py::none(), py::arg("num_nodes") = 0,
             "Builds a store from parallel arrays; edge ids are array positions.")
        .def_property_readonly("num_nodes", &EventStore::num_nodes)
        .def_property_readonly("num_edges", &EventStore::num_edges)
        .def_property_readonly("feature_dim", &EventStore::feature_dim)
        .def("__len__", &EventStore::num_edges)
        .def("to_arrays", &store_arrays, "Time-sorted columns: id, src, dst, t, label, features.")
        .def("degree_at", &EventStore::degree_at, py::arg("node"), py::arg("t"))
        .def("save", [](const EventStore& s, const std::filesystem::path& p) { write_labeled_edges(s, p); },
             py::arg("path"));

    m.def("load_dataset", [](const std::filesystem::path& p, const std::string& fmt) { return load_dataset(p, fmt).store; },
          py::arg("path"), py::arg("format") = "edgelist");

    m.def("roc_auc", [](const std::vector<double>& s, const std::vector<int>& y) { return roc_auc(s, y); },
          py::arg("scores"), py::arg("labels"));

    m.def(
        "sample_subgraph",
        [](const EventStore& store, std::size_t ordinal, std::vector<std::size_t> fanouts, bool include_center,
           std::uint64_t seed) {
            SamplerConfig sc;
            sc.fanouts = std::move(fanouts);
            const SampledSubgraph g = sample_subgraph(store, ordinal, sc, include_center, seed);
            std::vector<std::size_t> events;
            std::vector<double> dt;
            for (const auto& e : g.events) {
                events.push_back(e.edge);
                dt.push_back(e.dt);
            }
            py::dict d;
            d["nodes"] = g.nodes;
            d["hop_of_node"] = g.hop_of_node;
            d["events"] = events;
            d["dt"] = dt;
            return d;
        },
        py::arg("store"), py::arg("ordinal"), py::arg("fanouts"), py::arg("include_center"), py::arg("seed") = 0,
        "Ego (include_center=True) or context subgraph of the edge at a time-sorted position.");

    m.def(
        "spectral_cluster",
        [](const EventStore& s, std::size_t k, std::uint64_t seed) { return spectral_cluster(s, k, seed).cluster; },
        py::arg("store"), py::arg("k"), py::arg("seed") = 0);

    m.def(
        "inject_anomalies",
        [](const EventStore& s, double rate, std::size_t k, std::uint64_t seed) {
            InjectionResult r = inject_anomalies(s, rate, k, seed);
            return py::make_tuple(std::move(r.store), r.injected_ids, r.clusters.cluster);
        },
        py::arg("store"), py::arg("rate") = 0.03, py::arg("k") = 30, py::arg("seed") = 0,
        "Returns (labeled store, injected edge ids, node clusters).");

    m.def(
        "generate_community_stream",
        [](std::size_t nodes, std::size_t edges, std::vector<double> periods, bool synchronized, std::uint64_t seed) {
            CommunityStreamOptions o;
            o.nodes = nodes;
            o.target_edges = edges;
            o.periods = std::move(periods);
            o.synchronized = synchronized;
            o.seed = seed;
            return generate_community_stream(o);
        },
        py::arg("nodes") = 500, py::arg("edges") = 2000, py::arg("periods") = std::vector<double>{1.0, 3.0},
        py::arg("synchronized") = false, py::arg("seed") = 0);

    m.def("inject_offbeat_repeats",
          [](const EventStore& s, const std::vector<double>& periods, double rate, std::uint64_t seed) {
              return inject_offbeat_repeats(s, periods, rate, seed);
          },
          py::arg("store"), py::arg("periods") = std::vector<double>{1.0, 3.0}, py::arg("rate") = 0.03,
          py::arg("seed") = 0);

    m.def("echsc_loss",
          [](const std::vector<double>& x, int y, const std::string& orientation) {
              return echsc_loss(row_of(x), y, orientation_from_string(orientation)).item();
          },
          py::arg("x"), py::arg("y"), py::arg("orientation") = "as-written");
    m.def("ecc_loss",
          [](const std::vector<double>& pe, const std::vector<double>& pc, const std::vector<double>& pn) {
              return ecc_loss(row_of(pe), row_of(pc), row_of(pn)).item();
          },
          py::arg("p_ego"), py::arg("p_ctx"), py::arg("p_neg"));
    m.def("anomaly_score",
          [](const std::vector<double>& x, const std::string& orientation) {
              return anomaly_score(row_of(x), orientation_from_string(orientation));
          },
          py::arg("x"), py::arg("orientation") = "as-written");

    m.def("config_keys", &config_keys, "Documented configuration keys with descriptions.");
    m.def("config_text", [](const std::map<std::string, std::string>& s) { return config_from(s).to_text(); },
          py::arg("settings"), "Validated canonical config text for a key -> value mapping.");

    py::class_<Session>(m, "Experiment")
        .def(py::init([](const std::map<std::string, std::string>& settings) {
                 ExperimentConfig cfg = config_from(settings);
                 PreparedData data = prepare_data(cfg);
                 Model model = build_model(cfg, data);
                 return std::make_unique<Session>(Session{std::move(cfg), std::move(data), std::move(model), {}});
             }),
             py::arg("settings"), "Loads (and optionally injects) the configured dataset and builds a fresh model.")
        .def_property_readonly("store", [](const Session& s) { return s.data.store(); })
        .def_property_readonly("splits",
                               [](const Session& s) {
                                   auto r = [](EdgeRange e) { return py::make_tuple(e.begin, e.end); };
                                   py::dict d;
                                   d["train"] = r(s.data.splits.train);
                                   d["val"] = r(s.data.splits.val);
                                   d["test"] = r(s.data.splits.test);
                                   return d;
                               })
        .def_property_readonly("config_text", [](const Session& s) { return s.config.to_text(); })
        .def(
            "train",
            [](Session& s, const std::optional<std::filesystem::path>& output_dir) {
                TrainingRun run;
                {
                    py::gil_scoped_release release;
                    run = train_model(s.config, s.data, s.model);
                }
                if (output_dir) write_training_run(*output_dir, s.config, s.model, run);
                py::dict d;
                d["best_epoch"] = run.result.best_epoch;
                d["best_val_auc"] = run.result.best_val_auc;
                d["log"] = log_list(run.result.log);
                d["labeled_ids"] = std::vector<std::uint64_t>(run.labels.anomalies.begin(), run.labels.anomalies.end());
                s.run = std::move(run);
                return d;
            },
            py::arg("output_dir") = py::none(),
            "Fits the model; writes a run directory when output_dir is given.")
        .def(
            "evaluate",
            [](const Session& s, const std::string& split) {
                EvaluationResult r;
                {
                    py::gil_scoped_release release;
                    r = evaluate(s.model, s.data.store(), split_by_name(s.data.splits, split), s.config.eval_seed,
                                 s.config.workers);
                }
                return result_dict(r);
            },
            py::arg("split") = "test")
        .def(
            "export_embeddings",
            [](const Session& s, const std::filesystem::path& path, const std::string& split) {
                export_embeddings(s.model, s.data.store(), split_by_name(s.data.splits, split), path,
                                  s.config.eval_seed);
            },
            py::arg("path"), py::arg("split") = "test")
        .def("save_checkpoint", [](const Session& s, const std::filesystem::path& p) { s.model.save(p); },
             py::arg("path"))
        .def("load_checkpoint", [](Session& s, const std::filesystem::path& p) { s.model.load(p); }, py::arg("path"));
}
