#pragma once

#include "dgad/tgraph.hpp"

#include <cstdint>
#include <vector>

namespace dgad {

/// Community-structured interaction stream with node turnover. Each node is
/// active for a window of `lifetime` (fraction of the horizon) starting at a
/// uniform birth time. Within a community, nodes sorted by birth are paired
/// with their next `partners` successors; a pair interacts about once per the
/// community's period (uniform phase, jitter as a fraction of the period)
/// while both nodes are active. Turnover keeps degree statistics stationary.
struct CommunityStreamOptions {
    std::size_t nodes = 500;
    std::size_t target_edges = 2000;
    std::vector<double> periods{1.0, 3.0};  // one per community
    double lifetime = 0.25;
    std::size_t partners = 2;
    double jitter = 0.1;
    /// When set, every pair of a community shares one phase, so all of the
    /// community's events fall on a common beat of its period.
    bool synchronized = false;
    std::uint64_t seed = 0;
};

/// Unlabeled store; node v belongs to community v % periods.size().
EventStore generate_community_stream(const CommunityStreamOptions& options);

/// Labels every edge normal, then adds round(rate |E|) anomalies, each a repeat
/// of an existing pair placed a fraction u ~ U[gap_lo, gap_hi] of its community
/// period after one of that pair's events. On a synchronized stream the
/// defaults put anomalies off the community beat. Structure is unchanged; only
/// timing marks the anomalies.
EventStore inject_offbeat_repeats(const EventStore& store, const std::vector<double>& periods,
                                  double rate, std::uint64_t seed, double gap_lo = 0.3,
                                  double gap_hi = 0.7);

}  // namespace dgad
