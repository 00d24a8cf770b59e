#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "fedlay/graph.hpp"
#include "fedlay/rng.hpp"
#include "fedlay/spectral.hpp"

namespace fedlay::topo {

enum class BaselineKind {
  ring,
  grid2d,
  torus,
  hypercube,
  complete,
  chord,
  random_regular,
};

BaselineKind parse_baseline_kind(std::string_view name);
std::string_view to_string(BaselineKind kind);

struct BaselineParams {
  // grid2d / torus; when both are zero the most square factorization is used
  std::size_t rows = 0;
  std::size_t cols = 0;
  // random_regular
  std::size_t degree = 0;
  std::uint64_t seed = 0;
  // random_regular: redraw until connected
  bool require_connected = true;
};

// Vertex ids are 0..n-1. Throws ParameterError for incompatible inputs.
OverlayGraph generate_baseline(BaselineKind kind, std::size_t n,
                               const BaselineParams& params = {});

// Uniform-ish random d-regular simple graph: stubs are paired at random,
// pairs that would create a loop or multi-edge are redrawn, and a dead end
// restarts from scratch. For d > (n-1)/2 the complement of an
// (n-1-d)-regular graph is returned.
OverlayGraph random_regular_graph(std::size_t n, std::size_t d, Rng& rng,
                                  bool require_connected = true);

// Draws k random d-regular graphs and returns the minimum of each metric
// taken independently over the samples.
TopologyMetrics best_of_k(std::size_t n, std::size_t d, std::size_t k,
                          std::uint64_t seed);

}  // namespace fedlay::topo
