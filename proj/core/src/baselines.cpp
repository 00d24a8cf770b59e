#include "fedlay/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fedlay::topo {

namespace {

constexpr int kMaxRegularAttempts = 20000;

std::size_t most_square_rows(std::size_t n) {
  std::size_t best = 1;
  for (std::size_t r = 1; r * r <= n; ++r) {
    if (n % r == 0) best = r;
  }
  return best;
}

void resolve_grid_shape(std::size_t n, const BaselineParams& p,
                        std::size_t& rows, std::size_t& cols,
                        std::size_t min_side) {
  rows = p.rows;
  cols = p.cols;
  if (rows == 0 && cols == 0) {
    rows = most_square_rows(n);
    cols = n / rows;
  } else if (rows == 0) {
    rows = cols ? n / cols : 0;
  } else if (cols == 0) {
    cols = n / rows;
  }
  if (rows * cols != n || rows < min_side || cols < min_side) {
    throw ParameterError("grid shape " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " incompatible with n=" +
                         std::to_string(n));
  }
}

OverlayGraph make_ring(std::size_t n) {
  if (n < 2) throw ParameterError("ring needs n >= 2");
  auto g = OverlayGraph::with_nodes(n);
  for (std::size_t i = 0; i < n; ++i) g.add_edge(i, (i + 1) % n);
  return g;
}

OverlayGraph make_grid(std::size_t n, const BaselineParams& p, bool wrap) {
  std::size_t rows = 0, cols = 0;
  resolve_grid_shape(n, p, rows, cols, wrap ? 3 : 1);
  auto g = OverlayGraph::with_nodes(n);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t v = r * cols + c;
      if (c + 1 < cols) {
        g.add_edge(v, v + 1);
      } else if (wrap) {
        g.add_edge(v, r * cols);
      }
      if (r + 1 < rows) {
        g.add_edge(v, v + cols);
      } else if (wrap) {
        g.add_edge(v, c);
      }
    }
  }
  return g;
}

OverlayGraph make_hypercube(std::size_t n) {
  if (n < 2 || (n & (n - 1)) != 0) {
    throw ParameterError("hypercube needs n = 2^k with k >= 1");
  }
  auto g = OverlayGraph::with_nodes(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t bit = 1; bit < n; bit <<= 1) {
      if ((v & bit) == 0) g.add_edge(v, v | bit);
    }
  }
  return g;
}

OverlayGraph make_complete(std::size_t n) {
  if (n < 2) throw ParameterError("complete graph needs n >= 2");
  auto g = OverlayGraph::with_nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) g.add_edge(i, j);
  }
  return g;
}

// Successor links plus fingers i -> i + 2^j (mod n) for every 2^j < n.
OverlayGraph make_chord(std::size_t n) {
  if (n < 2) throw ParameterError("chord needs n >= 2");
  auto g = OverlayGraph::with_nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t step = 1; step < n; step <<= 1) {
      const std::size_t j = (i + step) % n;
      if (j != i) g.add_edge(i, j);
    }
  }
  return g;
}

bool linked(const std::vector<std::vector<std::size_t>>& adj, std::size_t u,
            std::size_t v) {
  return std::find(adj[u].begin(), adj[u].end(), v) != adj[u].end();
}

// One pairing attempt; false on a dead end.
bool try_pairing(std::size_t n, std::size_t d, Rng& rng,
                 std::vector<std::vector<std::size_t>>& adj) {
  adj.assign(n, {});
  std::vector<std::size_t> stubs;
  stubs.reserve(n * d);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t k = 0; k < d; ++k) stubs.push_back(v);
  }
  std::size_t failures = 0;
  while (!stubs.empty()) {
    std::size_t i = uniform_below(rng, stubs.size());
    std::size_t j = uniform_below(rng, stubs.size());
    const std::size_t u = stubs[i];
    const std::size_t v = stubs[j];
    if (i != j && u != v && !linked(adj, u, v)) {
      adj[u].push_back(v);
      adj[v].push_back(u);
      if (i < j) std::swap(i, j);
      stubs[i] = stubs.back();
      stubs.pop_back();
      stubs[j] = stubs.back();
      stubs.pop_back();
      failures = 0;
      continue;
    }
    if (++failures < 64 + 8 * stubs.size()) continue;
    // Many misses in a row: check whether any legal pair is left at all.
    std::vector<std::size_t> open(stubs);
    std::sort(open.begin(), open.end());
    open.erase(std::unique(open.begin(), open.end()), open.end());
    bool any = false;
    for (std::size_t a = 0; a < open.size() && !any; ++a) {
      for (std::size_t b = a + 1; b < open.size() && !any; ++b) {
        any = !linked(adj, open[a], open[b]);
      }
    }
    if (!any) return false;
    failures = 0;
  }
  return true;
}

}  // namespace

BaselineKind parse_baseline_kind(std::string_view name) {
  if (name == "ring") return BaselineKind::ring;
  if (name == "grid2d" || name == "grid") return BaselineKind::grid2d;
  if (name == "torus") return BaselineKind::torus;
  if (name == "hypercube") return BaselineKind::hypercube;
  if (name == "complete") return BaselineKind::complete;
  if (name == "chord") return BaselineKind::chord;
  if (name == "random_regular" || name == "rrg") {
    return BaselineKind::random_regular;
  }
  throw ParameterError("unknown topology kind '" + std::string(name) + "'");
}

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::ring: return "ring";
    case BaselineKind::grid2d: return "grid2d";
    case BaselineKind::torus: return "torus";
    case BaselineKind::hypercube: return "hypercube";
    case BaselineKind::complete: return "complete";
    case BaselineKind::chord: return "chord";
    case BaselineKind::random_regular: return "random_regular";
  }
  return "unknown";
}

OverlayGraph random_regular_graph(std::size_t n, std::size_t d, Rng& rng,
                                  bool require_connected) {
  if (n < 2) throw ParameterError("random regular graph needs n >= 2");
  if (d >= n) {
    throw ParameterError("degree " + std::to_string(d) +
                         " must be below n=" + std::to_string(n));
  }
  if ((n * d) % 2 != 0) {
    throw ParameterError("n*d must be even for a d-regular graph");
  }
  if (require_connected && (d == 0 || (d == 1 && n > 2))) {
    throw ParameterError("no connected " + std::to_string(d) +
                         "-regular graph on " + std::to_string(n) + " nodes");
  }
  const bool complement = d > (n - 1) / 2;
  const std::size_t draw_degree = complement ? n - 1 - d : d;

  std::vector<std::vector<std::size_t>> adj;
  for (int attempt = 0; attempt < kMaxRegularAttempts; ++attempt) {
    if (!try_pairing(n, draw_degree, rng, adj)) continue;
    auto g = OverlayGraph::with_nodes(n);
    if (complement) {
      for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
          if (!linked(adj, u, v)) g.add_edge(u, v);
        }
      }
    } else {
      for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v : adj[u]) {
          if (u < v) g.add_edge(u, v);
        }
      }
    }
    if (!require_connected || is_connected(g)) return g;
  }
  throw GraphError("random regular generator gave up after " +
                   std::to_string(kMaxRegularAttempts) + " attempts");
}

OverlayGraph generate_baseline(BaselineKind kind, std::size_t n,
                               const BaselineParams& params) {
  switch (kind) {
    case BaselineKind::ring: return make_ring(n);
    case BaselineKind::grid2d: return make_grid(n, params, false);
    case BaselineKind::torus: return make_grid(n, params, true);
    case BaselineKind::hypercube: return make_hypercube(n);
    case BaselineKind::complete: return make_complete(n);
    case BaselineKind::chord: return make_chord(n);
    case BaselineKind::random_regular: {
      Rng rng = make_rng(params.seed, "random_regular", n * 1000 + params.degree);
      return random_regular_graph(n, params.degree, rng,
                                  params.require_connected);
    }
  }
  throw ParameterError("unknown baseline kind");
}

TopologyMetrics best_of_k(std::size_t n, std::size_t d, std::size_t k,
                          std::uint64_t seed) {
  if (k == 0) throw ParameterError("best_of_k needs k >= 1");
  Rng rng = make_rng(seed, "best_of_k", n * 1000 + d);
  TopologyMetrics best;
  best.lambda = std::numeric_limits<double>::infinity();
  best.convergence_factor = std::numeric_limits<double>::infinity();
  best.diameter = std::numeric_limits<std::size_t>::max();
  best.avg_shortest_path = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    const auto g = random_regular_graph(n, d, rng, true);
    const auto m = compute_metrics(g);
    best.lambda = std::min(best.lambda, m.lambda);
    best.convergence_factor =
        std::min(best.convergence_factor, m.convergence_factor);
    best.diameter = std::min(best.diameter, m.diameter);
    best.avg_shortest_path = std::min(best.avg_shortest_path, m.avg_shortest_path);
  }
  return best;
}

}  // namespace fedlay::topo
