#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fedlay {

// Stands in for a peer's network address. Total order is used for every
// tie-break in the overlay.
using NodeId = std::uint64_t;

// Simulated time in integer milliseconds.
using SimTime = std::int64_t;

// Invalid static configuration (bad L, bad period, malformed config file).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Arguments that violate an operation's preconditions.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Graph-level failures such as asking for lambda of a disconnected graph.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a protocol invariant is violated at runtime.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fedlay
