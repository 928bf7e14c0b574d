#pragma once

#include "dgad/tgraph.hpp"

#include <random>
#include <vector>

namespace dgad::testing {

// Copy of `store` where edge ordinal i is an anomaly iff is_anomaly(i).
template <class Pred>
EventStore relabel(const EventStore& store, Pred is_anomaly) {
    std::vector<TemporalEdge> es = store.edges();
    for (std::size_t i = 0; i < es.size(); ++i) es[i].label = is_anomaly(i) ? Label::Anomaly : Label::Normal;
    return EventStore(std::move(es), store.num_nodes());
}

}  // namespace dgad::testing
