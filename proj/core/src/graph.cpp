#include "fedlay/graph.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <string>

#include "fedlay/rng.hpp"

namespace fedlay::topo {

OverlayGraph OverlayGraph::with_nodes(std::size_t n) {
  OverlayGraph g;
  for (std::size_t i = 0; i < n; ++i) g.add_node(i);
  return g;
}

std::size_t OverlayGraph::add_node(NodeId id) {
  auto [it, inserted] = index_.try_emplace(id, ids_.size());
  if (inserted) {
    ids_.push_back(id);
    adj_.emplace_back();
  }
  return it->second;
}

bool OverlayGraph::add_edge(NodeId a, NodeId b) {
  if (a == b) {
    throw GraphError("self-loop on node " + std::to_string(a));
  }
  const std::size_t ia = add_node(a);
  const std::size_t ib = add_node(b);
  auto& la = adj_[ia];
  auto pos = std::lower_bound(la.begin(), la.end(), ib);
  if (pos != la.end() && *pos == ib) return false;
  la.insert(pos, ib);
  auto& lb = adj_[ib];
  lb.insert(std::lower_bound(lb.begin(), lb.end(), ia), ia);
  ++edge_count_;
  return true;
}

bool OverlayGraph::add_edge(NodeId a, NodeId b, int space) {
  const bool inserted = add_edge(a, b);
  edge_spaces_[make_edge(a, b)].insert(space);
  return inserted;
}

std::optional<std::size_t> OverlayGraph::index_of(NodeId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool OverlayGraph::has_edge(NodeId a, NodeId b) const {
  auto ia = index_of(a);
  auto ib = index_of(b);
  if (!ia || !ib) return false;
  const auto& la = adj_[*ia];
  return std::binary_search(la.begin(), la.end(), *ib);
}

std::vector<NodeId> OverlayGraph::neighbors_of(NodeId id) const {
  std::vector<NodeId> out;
  if (auto i = index_of(id)) {
    for (std::size_t j : adj_[*i]) out.push_back(ids_[j]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Edge> OverlayGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (std::size_t i = 0; i < adj_.size(); ++i) {
    for (std::size_t j : adj_[i]) {
      if (i < j) out.push_back(make_edge(ids_[i], ids_[j]));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodeId> ring_order(const std::map<NodeId, CoordVector>& coords,
                               std::size_t space) {
  std::vector<RingPoint> pts;
  pts.reserve(coords.size());
  for (const auto& [id, cv] : coords) {
    if (space >= cv.size()) {
      throw ParameterError("ring_order: space index out of range");
    }
    pts.push_back({id, cv[space]});
  }
  std::sort(pts.begin(), pts.end(), ring_less);
  std::vector<NodeId> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(p.id);
  return out;
}

OverlayGraph ground_truth_adjacency(
    const std::map<NodeId, CoordVector>& coords) {
  if (coords.size() < 2) {
    throw ParameterError("ground truth needs at least two nodes");
  }
  const std::size_t spaces = coords.begin()->second.size();
  if (spaces == 0) throw ConfigError("coordinate vectors are empty");
  for (const auto& [id, cv] : coords) {
    if (cv.size() != spaces) {
      throw ParameterError("coordinate vectors differ in length");
    }
  }
  OverlayGraph g;
  for (const auto& [id, cv] : coords) g.add_node(id);
  for (std::size_t s = 0; s < spaces; ++s) {
    const auto order = ring_order(coords, s);
    const std::size_t n = order.size();
    for (std::size_t i = 0; i < n; ++i) {
      const NodeId a = order[i];
      const NodeId b = order[(i + 1) % n];
      g.add_edge(a, b, static_cast<int>(s));
    }
  }
  g.set_node_coords(coords);
  return g;
}

OverlayGraph fedlay_overlay(std::size_t n, std::size_t spaces, std::uint64_t seed) {
  Rng rng = make_rng(seed, "fedlay_ids", n);
  std::map<NodeId, CoordVector> coords;
  while (coords.size() < n) {
    const NodeId id = rng();
    if (!coords.count(id)) coords.emplace(id, derive_coords(id, spaces));
  }
  return ground_truth_adjacency(coords);
}

namespace {

// BFS distances from `src`; unreachable vertices stay at max().
void bfs(const OverlayGraph& g, std::size_t src, std::vector<std::size_t>& dist,
         std::deque<std::size_t>& queue) {
  constexpr auto kInf = std::numeric_limits<std::size_t>::max();
  std::fill(dist.begin(), dist.end(), kInf);
  dist[src] = 0;
  queue.clear();
  queue.push_back(src);
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v : g.adjacent(u)) {
      if (dist[v] == kInf) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
}

}  // namespace

std::size_t component_count(const OverlayGraph& g) {
  const std::size_t n = g.size();
  std::vector<bool> seen(n, false);
  std::size_t components = 0;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    ++components;
    seen[s] = true;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v : g.adjacent(u)) {
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
  }
  return components;
}

bool is_connected(const OverlayGraph& g) {
  return g.size() > 0 && component_count(g) == 1;
}

PathStats path_stats(const OverlayGraph& g) {
  const std::size_t n = g.size();
  if (n == 0) throw GraphError("path statistics of an empty graph");
  const std::size_t components = component_count(g);
  if (components != 1) {
    throw GraphError("graph is disconnected (" + std::to_string(components) +
                     " components)");
  }
  PathStats stats;
  if (n == 1) return stats;
  std::vector<std::size_t> dist(n);
  std::deque<std::size_t> queue;
  long double total = 0;
  for (std::size_t s = 0; s < n; ++s) {
    bfs(g, s, dist, queue);
    for (std::size_t t = s + 1; t < n; ++t) {
      stats.diameter = std::max(stats.diameter, dist[t]);
      total += dist[t];
    }
  }
  const long double pairs = static_cast<long double>(n) * (n - 1) / 2;
  stats.avg_shortest_path = static_cast<double>(total / pairs);
  return stats;
}

std::size_t diameter(const OverlayGraph& g) { return path_stats(g).diameter; }

double avg_shortest_path(const OverlayGraph& g) {
  return path_stats(g).avg_shortest_path;
}

}  // namespace fedlay::topo
