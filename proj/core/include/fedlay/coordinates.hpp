#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "fedlay/types.hpp"

namespace fedlay {

// A position on the unit ring. Always in [0, 1); construction wraps.
// Increasing coordinate is the clockwise direction.
class Coord {
 public:
  constexpr Coord() = default;
  explicit Coord(double value);

  constexpr double value() const { return value_; }

  friend constexpr auto operator<=>(Coord, Coord) = default;

 private:
  double value_ = 0.0;
};

// One coordinate per virtual ring space.
using CoordVector = std::vector<Coord>;

// Coordinate of `id` in ring space `space`: the top 53 bits of a 64-bit hash
// of the little-endian bytes of id (8 bytes) followed by space (4 bytes),
// divided by 2^53.
Coord derive_coord(NodeId id, std::uint32_t space);

// Throws ConfigError when spaces == 0.
CoordVector derive_coords(NodeId id, std::size_t spaces);

// min(|x - y|, 1 - |x - y|), in [0, 0.5].
double circular_distance(Coord x, Coord y);

// Arc length travelling clockwise (increasing values) from `from` to `to`.
double cw_arc_length(Coord from, Coord to);

// Arc length travelling counterclockwise from `from` to `to`.
double ccw_arc_length(Coord from, Coord to);

struct RingPoint {
  NodeId id = 0;
  Coord coord;
};

// Ring order: by coordinate, equal coordinates ordered by id.
constexpr bool ring_less(const RingPoint& a, const RingPoint& b) {
  return a.coord != b.coord ? a.coord < b.coord : a.id < b.id;
}

// Candidate with the smallest circular distance to target; ties go to the
// smaller id. Throws ParameterError on an empty candidate set.
NodeId closest_of(std::span<const RingPoint> candidates, Coord target);

// True iff x lies strictly inside the shorter arc between a and b. When the
// two arcs are equal (distance exactly 0.5) the clockwise arc starting at `a`
// is used. Throws ParameterError when a == b.
bool on_smaller_arc(Coord a, Coord b, Coord x);

// Same, but the tie at distance 0.5 is resolved towards the clockwise arc
// from the endpoint with the smaller id.
bool on_smaller_arc(const RingPoint& a, const RingPoint& b, Coord x);

}  // namespace fedlay
