#include "dgad/tgraph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dgad {

std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) { return mix64(mix64(a) ^ b); }

std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix64(mix64(a, b) ^ c);
}

EventStore::EventStore(std::vector<TemporalEdge> edges, std::size_t num_nodes)
    : edges_(std::move(edges)) {
    std::sort(edges_.begin(), edges_.end(), [](const TemporalEdge& a, const TemporalEdge& b) {
        return a.t < b.t || (a.t == b.t && a.id < b.id);
    });
    NodeId max_node = 0;
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const auto& e = edges_[i];
        if (!std::isfinite(e.t)) {
            throw std::invalid_argument("edge " + std::to_string(e.id) + ": non-finite timestamp");
        }
        if (i == 0) {
            feature_dim_ = e.features.size();
        } else if (e.features.size() != feature_dim_) {
            throw std::invalid_argument("edge " + std::to_string(e.id) + ": feature dimension " +
                                        std::to_string(e.features.size()) + " differs from " +
                                        std::to_string(feature_dim_));
        }
        if (!ordinal_by_id_.emplace(e.id, i).second) {
            throw std::invalid_argument("duplicate edge id " + std::to_string(e.id));
        }
        max_node = std::max({max_node, e.src, e.dst});
    }
    num_nodes_ = edges_.empty() ? num_nodes : std::max(num_nodes, max_node + 1);
    incidence_.resize(num_nodes_);
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        incidence_[edges_[i].src].push_back(i);
        if (edges_[i].dst != edges_[i].src) incidence_[edges_[i].dst].push_back(i);
    }
}

std::size_t EventStore::ordinal_of(std::uint64_t edge_id) const {
    auto it = ordinal_by_id_.find(edge_id);
    if (it == ordinal_by_id_.end()) {
        throw std::out_of_range("unknown edge id " + std::to_string(edge_id));
    }
    return it->second;
}

void EventStore::check_node(NodeId node) const {
    if (node >= num_nodes_) throw std::out_of_range("unknown node " + std::to_string(node));
}

std::span<const std::size_t> EventStore::incidence(NodeId node) const {
    check_node(node);
    return incidence_[node];
}

std::size_t EventStore::cutoff(NodeId node, double t, bool strict) const {
    const auto& inc = incidence_[node];
    auto it = std::partition_point(inc.begin(), inc.end(), [&](std::size_t ord) {
        return strict ? edges_[ord].t < t : edges_[ord].t <= t;
    });
    return static_cast<std::size_t>(it - inc.begin());
}

std::vector<EventStore::Neighbor> EventStore::neighbors_before(NodeId node, double t,
                                                               bool strict) const {
    check_node(node);
    const std::size_t n = cutoff(node, t, strict);
    std::vector<Neighbor> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& e = edges_[incidence_[node][k]];
        out.push_back({incidence_[node][k], e.src == node ? e.dst : e.src});
    }
    return out;
}

std::size_t EventStore::degree_at(NodeId node, double t) const {
    check_node(node);
    return cutoff(node, t, false);
}

SampledSubgraph sample_subgraph(const EventStore& store, std::size_t center_ordinal,
                                const SamplerConfig& config, bool include_center,
                                std::uint64_t seed) {
    if (config.fanouts.empty()) throw std::invalid_argument("sample_subgraph: empty fan-out list");
    const TemporalEdge& center = store.edge(center_ordinal);
    const double tc = center.t;

    SampledSubgraph g;
    g.center = center;
    g.center_ordinal = center_ordinal;
    g.includes_center = include_center;

    std::unordered_map<NodeId, std::size_t> local;
    auto intern = [&](NodeId v, std::size_t hop) {
        auto [it, fresh] = local.emplace(v, g.nodes.size());
        if (fresh) {
            g.nodes.push_back(v);
            g.hop_of_node.push_back(hop);
        }
        return std::pair{it->second, fresh};
    };
    std::vector<std::size_t> frontier;
    frontier.push_back(intern(center.src, 0).first);
    if (auto [idx, fresh] = intern(center.dst, 0); fresh) frontier.push_back(idx);

    std::unordered_map<std::size_t, std::size_t> event_index;  // ordinal -> events[]
    auto add_event = [&](std::size_t ord, std::size_t hop, std::vector<std::size_t>& next) {
        if (event_index.count(ord)) return;
        const auto& e = store.edge(ord);
        auto [ls, fresh_s] = intern(e.src, hop + 1);
        if (fresh_s) next.push_back(ls);
        auto [ld, fresh_d] = intern(e.dst, hop + 1);
        if (fresh_d) next.push_back(ld);
        event_index.emplace(ord, g.events.size());
        g.events.push_back({ord, ls, ld, tc - e.t, e.features});
    };

    // Uniform sampling without replacement: keep the candidates with the
    // smallest seeded keys. Keys depend only on (seed, node, edge), so ego and
    // context graphs of the same centre draw from one consistent ordering.
    auto choose = [&](std::span<const NodeId> owners, std::size_t budget) {
        struct Cand {
            std::uint64_t key;
            std::size_t ord;
        };
        std::unordered_map<std::size_t, std::uint64_t> best;  // ordinal -> smallest key
        for (NodeId owner : owners) {
            for (const auto& nb : store.neighbors_before(owner, tc, !include_center)) {
                std::uint64_t key = mix64(seed, owner, store.edge(nb.edge).id);
                if (include_center && nb.edge == center_ordinal) key = 0;
                auto [it, fresh] = best.emplace(nb.edge, key);
                if (!fresh) it->second = std::min(it->second, key);
            }
        }
        std::vector<Cand> cands;
        cands.reserve(best.size());
        for (const auto& [ord, key] : best) cands.push_back({key, ord});
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            return a.key < b.key || (a.key == b.key && a.ord < b.ord);
        });
        if (cands.size() > budget) cands.resize(budget);
        std::vector<std::size_t> out;
        for (const auto& c : cands) out.push_back(c.ord);
        std::sort(out.begin(), out.end());
        return out;
    };

    std::vector<std::size_t> drawn_by;  // parallel to nodes, filled lazily
    for (std::size_t hop = 0; hop < config.fanouts.size() && !frontier.empty(); ++hop) {
        std::vector<std::size_t> next;
        const std::size_t budget = config.fanouts[hop];
        if (hop == 0 && config.shared_endpoint_budget && frontier.size() == 2) {
            const NodeId owners[2] = {g.nodes[frontier[0]], g.nodes[frontier[1]]};
            for (std::size_t ord : choose(owners, budget)) add_event(ord, hop, next);
        } else {
            for (std::size_t u : frontier) {
                const NodeId owner[1] = {g.nodes[u]};
                const auto picked = choose(owner, budget);
                if (drawn_by.size() <= u) drawn_by.resize(u + 1, 0);
                drawn_by[u] = picked.size();
                for (std::size_t ord : picked) add_event(ord, hop, next);
            }
        }
        frontier = std::move(next);
    }
    drawn_by.resize(g.nodes.size(), 0);
    g.sampled_per_node = std::move(drawn_by);

    // Canonical event order: by store ordinal.
    std::vector<std::size_t> perm(g.events.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t a, std::size_t b) { return g.events[a].edge < g.events[b].edge; });
    std::vector<SampledEvent> sorted;
    sorted.reserve(g.events.size());
    for (std::size_t i : perm) sorted.push_back(std::move(g.events[i]));
    g.events = std::move(sorted);

    g.adjacency.assign(g.nodes.size(), {});
    for (std::size_t i = 0; i < g.events.size(); ++i) {
        g.adjacency[g.events[i].local_src].push_back(i);
        if (g.events[i].local_dst != g.events[i].local_src) {
            g.adjacency[g.events[i].local_dst].push_back(i);
        }
    }
    return g;
}

Incidence incidence_with_self_loops(const SampledSubgraph& graph) {
    Incidence inc;
    for (std::size_t v = 0; v < graph.nodes.size(); ++v) {
        for (std::size_t ei : graph.adjacency[v]) {
            const auto& e = graph.events[ei];
            inc.node.push_back(v);
            inc.other.push_back(e.local_src == v ? e.local_dst : e.local_src);
            inc.dt.push_back(e.dt);
            inc.features.push_back(&e.features);
        }
        inc.node.push_back(v);
        inc.other.push_back(v);
        inc.dt.push_back(0.0);
        inc.features.push_back(nullptr);
    }
    return inc;
}

}  // namespace dgad
