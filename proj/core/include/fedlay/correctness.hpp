#pragma once

#include <map>
#include <set>

#include "fedlay/coordinates.hpp"

namespace fedlay::topo {

// Directed-entry agreement between stored neighbor sets and the ground-truth
// overlay over the given live nodes: entries (u, v) that are both stored and
// true, divided by the sum of true degrees plus the stored entries that are
// not true. The result is 1 exactly when every node stores its true
// neighbors and nothing else.
double topology_correctness(
    const std::map<NodeId, std::set<NodeId>>& stored_neighbors,
    const std::map<NodeId, CoordVector>& coords);

}  // namespace fedlay::topo
