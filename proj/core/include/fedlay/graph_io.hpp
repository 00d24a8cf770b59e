#pragma once

#include <iosfwd>

#include "fedlay/graph.hpp"

namespace fedlay::topo {

// Edge-list text format:
//   n=<N> L=<L>
//   <u> <v>
//   ...
// L is 0 for graphs that did not come from ring spaces.
void write_edge_list(std::ostream& out, const OverlayGraph& g,
                     std::size_t spaces = 0);

struct EdgeListFile {
  OverlayGraph graph;
  std::size_t spaces = 0;
};

// Throws ConfigError with the offending line number on malformed input.
EdgeListFile read_edge_list(std::istream& in);

}  // namespace fedlay::topo
