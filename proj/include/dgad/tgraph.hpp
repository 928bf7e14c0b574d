#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace dgad {

using NodeId = std::size_t;

enum class Label : std::int8_t { Unlabeled = -1, Normal = 0, Anomaly = 1 };

/// One timestamped interaction src -> dst.
struct TemporalEdge {
    std::uint64_t id = 0;
    NodeId src = 0;
    NodeId dst = 0;
    double t = 0.0;
    std::vector<double> features;
    Label label = Label::Unlabeled;
};

/// Half-open range [begin, end) of edge ordinals.
struct EdgeRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool empty() const { return end <= begin; }
};

/// Immutable, time-ordered edge collection with per-node incidence lists.
///
/// Edges are held sorted by (t, id); their position in that order is the
/// edge's ordinal. Incidence is undirected: an edge appears in the list of
/// both endpoints (once for a self-interaction).
class EventStore {
public:
    struct Neighbor {
        std::size_t edge;  // ordinal
        NodeId node;       // opposite endpoint
        bool operator==(const Neighbor&) const = default;
    };

    EventStore() = default;
    /// `num_nodes` of 0 means max endpoint + 1.
    explicit EventStore(std::vector<TemporalEdge> edges, std::size_t num_nodes = 0);

    std::size_t num_nodes() const { return num_nodes_; }
    std::size_t num_edges() const { return edges_.size(); }
    std::size_t feature_dim() const { return feature_dim_; }
    const std::vector<TemporalEdge>& edges() const { return edges_; }
    const TemporalEdge& edge(std::size_t ordinal) const { return edges_.at(ordinal); }
    std::size_t ordinal_of(std::uint64_t edge_id) const;
    std::span<const std::size_t> incidence(NodeId node) const;

    /// Incident events with t_event <= t (or < t when strict), in time order.
    std::vector<Neighbor> neighbors_before(NodeId node, double t, bool strict) const;
    /// Number of incident events with t_event <= t.
    std::size_t degree_at(NodeId node, double t) const;

private:
    void check_node(NodeId node) const;
    std::size_t cutoff(NodeId node, double t, bool strict) const;

    std::vector<TemporalEdge> edges_;
    std::vector<std::vector<std::size_t>> incidence_;
    std::unordered_map<std::uint64_t, std::size_t> ordinal_by_id_;
    std::size_t num_nodes_ = 0;
    std::size_t feature_dim_ = 0;
};

struct SamplerConfig {
    std::vector<std::size_t> fanouts{25, 10, 5};
    /// When set, the two endpoints draw their first-hop events from one pooled
    /// budget of fanouts[0] instead of one budget each.
    bool shared_endpoint_budget = false;
};

struct SampledEvent {
    std::size_t edge;  // ordinal in the store
    std::size_t local_src;
    std::size_t local_dst;
    double dt;  // t_center - t_event, raw time units
    std::vector<double> features;
};

/// Causal k-hop neighbourhood of a centre edge.
///
/// `events` holds real interactions only; consumers that need a self-event per
/// node add it themselves (see `incidence_with_self_loops`).
struct SampledSubgraph {
    TemporalEdge center;
    std::size_t center_ordinal = 0;
    bool includes_center = false;
    std::vector<NodeId> nodes;  // global ids; centre endpoints first
    std::vector<std::size_t> hop_of_node;
    std::vector<SampledEvent> events;
    std::vector<std::vector<std::size_t>> adjacency;  // node -> indices into events
    /// Events each frontier node drew, keyed by local node index.
    std::vector<std::size_t> sampled_per_node;

    std::size_t local_src() const { return 0; }
    std::size_t local_dst() const { return center.src == center.dst ? 0 : 1; }
    std::size_t num_nodes() const { return nodes.size(); }
};

/// Breadth-first causal sampling around edge `center_ordinal`. Each frontier
/// node at hop h keeps a uniform sample without replacement of at most
/// fanouts[h] incident events with t_event <= t_center (< t_center for a
/// context graph, which also drops the centre edge). An ego graph always keeps
/// the centre edge. Deterministic in `seed`.
SampledSubgraph sample_subgraph(const EventStore& store, std::size_t center_ordinal,
                                const SamplerConfig& config, bool include_center,
                                std::uint64_t seed);

/// Flattened incidence of a subgraph with one synthetic self-event per node
/// (dt = 0, zero features) appended after the node's real events.
struct Incidence {
    std::vector<std::size_t> node;   // attending node
    std::vector<std::size_t> other;  // opposite endpoint
    std::vector<double> dt;
    std::vector<const std::vector<double>*> features;  // null for self-events
};

Incidence incidence_with_self_loops(const SampledSubgraph& graph);

/// Stateless 64-bit mixer used for seeded per-item randomness.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace dgad
