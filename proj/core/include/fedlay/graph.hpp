#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fedlay/coordinates.hpp"
#include "fedlay/types.hpp"

namespace fedlay::topo {

using Edge = std::pair<NodeId, NodeId>;  // first < second

constexpr Edge make_edge(NodeId a, NodeId b) {
  return a < b ? Edge{a, b} : Edge{b, a};
}

// Static undirected simple graph over NodeIds. Vertices are also addressable
// by a dense index (insertion order) for the numeric routines.
class OverlayGraph {
 public:
  OverlayGraph() = default;

  // Vertices 0..n-1 with ids equal to their index.
  static OverlayGraph with_nodes(std::size_t n);

  std::size_t add_node(NodeId id);

  // Self-loops throw GraphError; duplicates are ignored. Unknown endpoints
  // are added as vertices. Returns true if a new edge was inserted.
  bool add_edge(NodeId a, NodeId b);

  // As above and records that ring space `space` produced the edge.
  bool add_edge(NodeId a, NodeId b, int space);

  std::size_t size() const { return ids_.size(); }
  std::size_t edge_count() const { return edge_count_; }

  NodeId id_at(std::size_t index) const { return ids_.at(index); }
  std::optional<std::size_t> index_of(NodeId id) const;
  bool contains(NodeId id) const { return index_.count(id) != 0; }

  const std::vector<std::size_t>& adjacent(std::size_t index) const {
    return adj_.at(index);
  }
  std::size_t degree(std::size_t index) const { return adj_.at(index).size(); }
  bool has_edge(NodeId a, NodeId b) const;

  // Neighbor ids of `id`, ascending.
  std::vector<NodeId> neighbors_of(NodeId id) const;

  // All edges, sorted.
  std::vector<Edge> edges() const;

  const std::vector<NodeId>& ids() const { return ids_; }

  // Provenance: which ring spaces produced each edge (FedLay graphs only).
  const std::map<Edge, std::set<int>>& edge_spaces() const {
    return edge_spaces_;
  }

  void set_node_coords(std::map<NodeId, CoordVector> coords) {
    node_coords_ = std::move(coords);
  }
  const std::optional<std::map<NodeId, CoordVector>>& node_coords() const {
    return node_coords_;
  }

 private:
  std::vector<NodeId> ids_;
  std::unordered_map<NodeId, std::size_t> index_;
  std::vector<std::vector<std::size_t>> adj_;  // each list kept sorted
  std::size_t edge_count_ = 0;
  std::map<Edge, std::set<int>> edge_spaces_;
  std::optional<std::map<NodeId, CoordVector>> node_coords_;
};

// Nodes of one ring space in ring order (coordinate, then id).
std::vector<NodeId> ring_order(const std::map<NodeId, CoordVector>& coords,
                               std::size_t space);

// The correct FedLay overlay: in every space each node is linked to its ring
// predecessor and successor. Throws ParameterError for fewer than two nodes
// or inconsistent coordinate dimensions.
OverlayGraph ground_truth_adjacency(
    const std::map<NodeId, CoordVector>& coords);

// FedLay overlay over n distinct random node ids drawn from `seed`, with
// coordinates derived from the ids.
OverlayGraph fedlay_overlay(std::size_t n, std::size_t spaces, std::uint64_t seed);

// Number of connected components (0 for the empty graph).
std::size_t component_count(const OverlayGraph& g);

bool is_connected(const OverlayGraph& g);

struct PathStats {
  std::size_t diameter = 0;
  double avg_shortest_path = 0.0;
};

// All-pairs BFS. Throws GraphError naming the component count when g is
// disconnected.
PathStats path_stats(const OverlayGraph& g);
std::size_t diameter(const OverlayGraph& g);
double avg_shortest_path(const OverlayGraph& g);

}  // namespace fedlay::topo
