#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedlay/types.hpp"

namespace fedlay::sim {

enum class ChurnAction { join, fail, leave };

std::string_view to_string(ChurnAction a);

// Either `count` anonymous events (ids drawn when the script is scheduled)
// or one event for an explicit id.
struct ChurnEntry {
  SimTime time = 0;
  ChurnAction action = ChurnAction::join;
  std::size_t count = 1;
  std::optional<NodeId> id;
  std::optional<NodeId> bootstrap;  // joins only

  friend bool operator==(const ChurnEntry&, const ChurnEntry&) = default;
};

using ChurnScript = std::vector<ChurnEntry>;

// One entry per line, '#' starts a comment:
//   <t_ms> join|fail|leave <count>
//   <t_ms> join|fail|leave id <id> [bootstrap <id>]
// Throws ConfigError naming the offending line.
ChurnScript parse_churn_script(std::istream& in);
ChurnScript read_churn_file(const std::string& path);
void write_churn_script(std::ostream& out, const ChurnScript& script);

}  // namespace fedlay::sim
