#include "dgad/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace dgad {

EventStore generate_community_stream(const CommunityStreamOptions& o) {
    const std::size_t c = o.periods.size();
    if (c == 0) throw std::invalid_argument("community stream: need at least one period");
    if (o.nodes < 3 * c) throw std::invalid_argument("community stream: need 3 nodes per community");
    for (double p : o.periods) {
        if (!(p > 0.0)) throw std::invalid_argument("community stream: periods must be positive");
    }
    if (o.jitter < 0.0 || o.jitter >= 0.5) throw std::invalid_argument("community stream: jitter in [0, 0.5)");
    if (!(o.lifetime > 0.0 && o.lifetime <= 1.0)) throw std::invalid_argument("community stream: lifetime in (0, 1]");
    if (o.partners == 0) throw std::invalid_argument("community stream: partners must be positive");
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Windows in normalised time [0, 1]; scaled to the horizon once the
    // expected event count is known.
    std::vector<double> birth(o.nodes);
    for (auto& b : birth) b = unit(rng) * (1.0 - o.lifetime);

    struct Pair {
        NodeId a, b;
        double start, end, period;  // normalised window
    };
    std::vector<Pair> pairs;
    double mass = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        std::vector<NodeId> members;
        for (NodeId v = k; v < o.nodes; v += c) members.push_back(v);
        std::sort(members.begin(), members.end(),
                  [&](NodeId x, NodeId y) { return birth[x] != birth[y] ? birth[x] < birth[y] : x < y; });
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j <= i + o.partners && j < members.size(); ++j) {
                const NodeId a = members[i], b = members[j];
                const double s = std::max(birth[a], birth[b]);
                const double e = std::min(birth[a], birth[b]) + o.lifetime;
                if (e <= s) continue;
                pairs.push_back({a, b, s, e, o.periods[k]});
                mass += (e - s) / o.periods[k];
            }
        }
    }
    const double horizon = static_cast<double>(o.target_edges) / mass;
    std::vector<double> community_phase(c);
    for (std::size_t k = 0; k < c; ++k) community_phase[k] = unit(rng) * o.periods[k];

    std::vector<TemporalEdge> edges;
    for (const auto& p : pairs) {
        const double lo = p.start * horizon, hi = p.end * horizon;
        double first = lo + unit(rng) * p.period;
        if (o.synchronized) {
            const double ph = community_phase[p.a % c];
            first = ph + std::ceil((lo - ph) / p.period) * p.period;
        }
        for (double base = first; base < hi; base += p.period) {
            TemporalEdge e;
            const bool flip = unit(rng) < 0.5;
            e.src = flip ? p.b : p.a;
            e.dst = flip ? p.a : p.b;
            e.t = base + (2.0 * unit(rng) - 1.0) * o.jitter * p.period;
            e.features = {0.0};
            edges.push_back(std::move(e));
        }
    }
    std::sort(edges.begin(), edges.end(), [](const auto& x, const auto& y) { return x.t < y.t; });
    for (std::size_t i = 0; i < edges.size(); ++i) edges[i].id = i;
    return EventStore(std::move(edges), o.nodes);
}

EventStore inject_offbeat_repeats(const EventStore& store, const std::vector<double>& periods,
                                double rate, std::uint64_t seed, double gap_lo, double gap_hi) {
    if (periods.empty()) throw std::invalid_argument("offbeat repeats: need periods");
    if (rate < 0.0) throw std::invalid_argument("offbeat repeats: negative rate");
    if (!(0.0 < gap_lo && gap_lo <= gap_hi)) throw std::invalid_argument("offbeat repeats: bad gap range");
    std::vector<TemporalEdge> edges = store.edges();
    std::uint64_t next_id = 0;
    for (auto& e : edges) {
        if (e.label == Label::Anomaly) throw std::invalid_argument("offbeat repeats: store already has anomalies");
        e.label = Label::Normal;
        next_id = std::max(next_id, e.id + 1);
    }
    const auto n = static_cast<std::size_t>(std::llround(rate * static_cast<double>(edges.size())));
    if (n > edges.size()) throw std::invalid_argument("offbeat repeats: rate too high");

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> pick(edges.size());
    std::iota(pick.begin(), pick.end(), 0);
    std::shuffle(pick.begin(), pick.end(), rng);
    std::uniform_real_distribution<double> gap(gap_lo, gap_hi);
    for (std::size_t i = 0; i < n; ++i) {
        TemporalEdge a = edges[pick[i]];
        a.id = next_id++;
        a.t += gap(rng) * periods[a.src % periods.size()];
        a.label = Label::Anomaly;
        std::fill(a.features.begin(), a.features.end(), 0.0);
        edges.push_back(std::move(a));
    }
    return EventStore(std::move(edges), store.num_nodes());
}

}  // namespace dgad
