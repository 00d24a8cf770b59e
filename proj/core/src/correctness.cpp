#include "fedlay/correctness.hpp"

#include "fedlay/graph.hpp"

namespace fedlay::topo {

double topology_correctness(
    const std::map<NodeId, std::set<NodeId>>& stored_neighbors,
    const std::map<NodeId, CoordVector>& coords) {
  const OverlayGraph truth = ground_truth_adjacency(coords);
  std::size_t denominator = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const NodeId u = truth.id_at(i);
    denominator += truth.degree(i);
    auto it = stored_neighbors.find(u);
    if (it == stored_neighbors.end()) continue;
    std::size_t hits = 0;
    for (std::size_t j : truth.adjacent(i)) {
      if (it->second.count(truth.id_at(j))) ++hits;
    }
    correct += hits;
    denominator += it->second.size() - hits;
  }
  return denominator == 0 ? 1.0
                          : static_cast<double>(correct) / static_cast<double>(denominator);
}

}  // namespace fedlay::topo
