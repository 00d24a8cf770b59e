#include "fedlay/graph_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace fedlay::topo {

void write_edge_list(std::ostream& out, const OverlayGraph& g,
                     std::size_t spaces) {
  out << "n=" << g.size() << " L=" << spaces << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.degree(i) == 0) out << g.id_at(i) << '\n';
  }
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

EdgeListFile read_edge_list(std::istream& in) {
  EdgeListFile file;
  std::string line;
  std::size_t line_no = 0;
  std::size_t declared = 0;
  bool have_header = false;
  auto fail = [&](const std::string& why) {
    throw ConfigError("edge list line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      unsigned long long n = 0, l = 0;
      if (std::sscanf(line.c_str(), "n=%llu L=%llu", &n, &l) != 2) {
        fail("expected header 'n=<N> L=<L>'");
      }
      declared = n;
      file.spaces = l;
      have_header = true;
      continue;
    }
    std::istringstream fields(line);
    unsigned long long u = 0, v = 0;
    if (!(fields >> u)) fail("expected a node id");
    if (fields >> v) {
      std::string extra;
      if (fields >> extra) fail("trailing token '" + extra + "'");
      if (u == v) fail("self-loop");
      file.graph.add_edge(u, v);
    } else {
      file.graph.add_node(u);
    }
  }
  if (!have_header) throw ConfigError("edge list is missing its header");
  if (file.graph.size() != declared) {
    throw ConfigError("edge list declares n=" + std::to_string(declared) +
                      " but lists " + std::to_string(file.graph.size()) +
                      " nodes");
  }
  return file;
}

}  // namespace fedlay::topo
