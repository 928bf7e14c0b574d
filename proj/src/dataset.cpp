#include "dgad/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace dgad {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& msg) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + msg);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    return f;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            std::string_view f = s.substr(start, i - start);
            while (!f.empty() && std::isspace(static_cast<unsigned char>(f.front()))) f.remove_prefix(1);
            while (!f.empty() && std::isspace(static_cast<unsigned char>(f.back()))) f.remove_suffix(1);
            out.push_back(f);
            start = i + 1;
        }
    }
    return out;
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

LoadedGraph load_edge_list(const std::filesystem::path& path) {
    auto f = open_input(path);
    std::unordered_map<long long, NodeId> dense;
    LoadedGraph g;
    std::vector<TemporalEdge> edges;
    auto node = [&](long long raw) {
        auto [it, added] = dense.try_emplace(raw, g.node_names.size());
        if (added) g.node_names.push_back(std::to_string(raw));
        return it->second;
    };
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto fields = split_ws(line);
        if (fields.empty() || fields[0].front() == '%' || fields[0].front() == '#') continue;
        if (fields.size() != 3 && fields.size() != 4) {
            fail(path, lineno, "expected 'src dst [weight] t', got " + std::to_string(fields.size()) + " fields");
        }
        long long s = 0, d = 0;
        double w = 0.0, t = 0.0;
        if (!parse_number(fields[0], s)) fail(path, lineno, "bad source node '" + std::string(fields[0]) + "'");
        if (!parse_number(fields[1], d)) fail(path, lineno, "bad target node '" + std::string(fields[1]) + "'");
        if (fields.size() == 4 && !parse_number(fields[2], w)) {
            fail(path, lineno, "bad weight '" + std::string(fields[2]) + "'");
        }
        if (!parse_number(fields.back(), t) || !std::isfinite(t)) {
            fail(path, lineno, "bad timestamp '" + std::string(fields.back()) + "'");
        }
        TemporalEdge e;
        e.id = edges.size();
        e.src = node(s);
        e.dst = node(d);
        e.t = t;
        e.features = {fields.size() == 4 ? w : 0.0};
        edges.push_back(std::move(e));
    }
    if (edges.empty()) throw std::runtime_error(path.string() + ": no edges");
    g.store = EventStore(std::move(edges), g.node_names.size());
    return g;
}

LoadedGraph load_jodie_csv(const std::filesystem::path& path) {
    auto f = open_input(path);
    struct Row {
        long long user, item;
        double t;
        int label;
        std::vector<double> features;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t lineno = 0;
    std::size_t arity = 0;
    long long max_user = -1, max_item = -1;
    bool header = true;
    while (std::getline(f, line)) {
        ++lineno;
        if (header) {
            header = false;
            continue;
        }
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_on(line, ',');
        if (fields.size() < 4) fail(path, lineno, "expected at least 4 columns");
        Row r;
        if (!parse_number(fields[0], r.user) || r.user < 0) fail(path, lineno, "bad user id");
        if (!parse_number(fields[1], r.item) || r.item < 0) fail(path, lineno, "bad item id");
        if (!parse_number(fields[2], r.t) || !std::isfinite(r.t)) fail(path, lineno, "bad timestamp");
        double label = 0;
        if (!parse_number(fields[3], label) || (label != 0.0 && label != 1.0)) {
            fail(path, lineno, "state_label must be 0 or 1");
        }
        r.label = static_cast<int>(label);
        for (std::size_t i = 4; i < fields.size(); ++i) {
            double v = 0;
            if (!parse_number(fields[i], v)) fail(path, lineno, "bad feature in column " + std::to_string(i + 1));
            r.features.push_back(v);
        }
        if (rows.empty()) {
            arity = r.features.size();
        } else if (r.features.size() != arity) {
            fail(path, lineno, "feature arity " + std::to_string(r.features.size()) + " differs from " +
                                   std::to_string(arity));
        }
        max_user = std::max(max_user, r.user);
        max_item = std::max(max_item, r.item);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw std::runtime_error(path.string() + ": no rows");

    const auto users = static_cast<std::size_t>(max_user + 1);
    const auto items = static_cast<std::size_t>(max_item + 1);
    LoadedGraph g;
    g.node_names.reserve(users + items);
    for (std::size_t u = 0; u < users; ++u) g.node_names.push_back("u" + std::to_string(u));
    for (std::size_t i = 0; i < items; ++i) g.node_names.push_back("i" + std::to_string(i));
    std::vector<TemporalEdge> edges;
    edges.reserve(rows.size());
    for (auto& r : rows) {
        TemporalEdge e;
        e.id = edges.size();
        e.src = static_cast<NodeId>(r.user);
        e.dst = users + static_cast<NodeId>(r.item);
        e.t = r.t;
        e.label = r.label ? Label::Anomaly : Label::Normal;
        e.features = arity ? std::move(r.features) : std::vector<double>{0.0};
        edges.push_back(std::move(e));
    }
    g.store = EventStore(std::move(edges), users + items);
    return g;
}

void write_labeled_edges(const EventStore& store, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << "# id\tsrc\tdst\tt\tlabel\tfeatures...\n";
    for (const auto& e : store.edges()) {
        f << e.id << '\t' << e.src << '\t' << e.dst << '\t' << fmt17(e.t) << '\t'
          << static_cast<int>(e.label);
        for (double v : e.features) f << '\t' << fmt17(v);
        f << '\n';
    }
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

LoadedGraph load_labeled_edges(const std::filesystem::path& path) {
    auto f = open_input(path);
    std::vector<TemporalEdge> edges;
    std::string line;
    std::size_t lineno = 0;
    std::size_t max_node = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto fields = split_ws(line);
        if (fields.empty() || fields[0].front() == '#') continue;
        if (fields.size() < 6) fail(path, lineno, "expected 'id src dst t label f_1 ...'");
        TemporalEdge e;
        long long label = 0;
        if (!parse_number(fields[0], e.id)) fail(path, lineno, "bad edge id");
        if (!parse_number(fields[1], e.src)) fail(path, lineno, "bad source node");
        if (!parse_number(fields[2], e.dst)) fail(path, lineno, "bad target node");
        if (!parse_number(fields[3], e.t) || !std::isfinite(e.t)) fail(path, lineno, "bad timestamp");
        if (!parse_number(fields[4], label) || label < -1 || label > 1) fail(path, lineno, "bad label");
        e.label = static_cast<Label>(label);
        for (std::size_t i = 5; i < fields.size(); ++i) {
            double v = 0;
            if (!parse_number(fields[i], v)) fail(path, lineno, "bad feature");
            e.features.push_back(v);
        }
        max_node = std::max({max_node, e.src, e.dst});
        edges.push_back(std::move(e));
    }
    if (edges.empty()) throw std::runtime_error(path.string() + ": no edges");
    LoadedGraph g;
    for (std::size_t i = 0; i <= max_node; ++i) g.node_names.push_back(std::to_string(i));
    try {
        g.store = EventStore(std::move(edges), max_node + 1);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    return g;
}

void write_node_map(const std::vector<std::string>& names, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < names.size(); ++i) f << i << '\t' << names[i] << '\n';
}

LoadedGraph load_dataset(const std::filesystem::path& path, const std::string& format) {
    if (format == "edgelist") return load_edge_list(path);
    if (format == "jodie") return load_jodie_csv(path);
    if (format == "labeled") return load_labeled_edges(path);
    throw std::invalid_argument("unknown dataset format '" + format + "' (edgelist, jodie, labeled)");
}

}  // namespace dgad
