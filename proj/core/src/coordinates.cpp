#include "fedlay/coordinates.hpp"

#include <array>
#include <cmath>

#include "fedlay/rng.hpp"

namespace fedlay {

Coord::Coord(double value) {
  if (!std::isfinite(value)) {
    throw ParameterError("coordinate must be finite");
  }
  double wrapped = value - std::floor(value);
  // value slightly below an integer can round up to exactly 1.0
  if (wrapped >= 1.0) wrapped = 0.0;
  value_ = wrapped;
}

Coord derive_coord(NodeId id, std::uint32_t space) {
  std::array<unsigned char, 12> bytes{};
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<unsigned char>(id >> (8 * i));
  }
  for (int i = 0; i < 4; ++i) {
    bytes[8 + i] = static_cast<unsigned char>(space >> (8 * i));
  }
  const std::uint64_t h = hash_bytes(bytes.data(), bytes.size());
  return Coord(static_cast<double>(h >> 11) * 0x1.0p-53);
}

CoordVector derive_coords(NodeId id, std::size_t spaces) {
  if (spaces == 0) {
    throw ConfigError("number of ring spaces L must be at least 1");
  }
  CoordVector out;
  out.reserve(spaces);
  for (std::size_t i = 0; i < spaces; ++i) {
    out.push_back(derive_coord(id, static_cast<std::uint32_t>(i)));
  }
  return out;
}

double circular_distance(Coord x, Coord y) {
  const double d = std::fabs(x.value() - y.value());
  return std::min(d, 1.0 - d);
}

double cw_arc_length(Coord from, Coord to) {
  double d = to.value() - from.value();
  if (d < 0.0) d += 1.0;
  return d;
}

double ccw_arc_length(Coord from, Coord to) {
  double d = from.value() - to.value();
  if (d < 0.0) d += 1.0;
  return d;
}

NodeId closest_of(std::span<const RingPoint> candidates, Coord target) {
  if (candidates.empty()) {
    throw ParameterError("closest_of: empty candidate set");
  }
  const RingPoint* best = &candidates.front();
  double best_d = circular_distance(best->coord, target);
  for (const RingPoint& c : candidates.subspan(1)) {
    const double d = circular_distance(c.coord, target);
    if (d < best_d || (d == best_d && c.id < best->id)) {
      best = &c;
      best_d = d;
    }
  }
  return best->id;
}

bool on_smaller_arc(Coord a, Coord b, Coord x) {
  if (a == b) {
    throw ParameterError("on_smaller_arc: endpoints coincide");
  }
  const double ab = cw_arc_length(a, b);
  if (ab <= 0.5) {
    // shorter (or tied) arc runs clockwise from a to b
    const double ax = cw_arc_length(a, x);
    return ax > 0.0 && ax < ab;
  }
  const double ba = cw_arc_length(b, a);
  const double bx = cw_arc_length(b, x);
  return bx > 0.0 && bx < ba;
}

bool on_smaller_arc(const RingPoint& a, const RingPoint& b, Coord x) {
  if (circular_distance(a.coord, b.coord) == 0.5) {
    return a.id < b.id ? on_smaller_arc(a.coord, b.coord, x)
                       : on_smaller_arc(b.coord, a.coord, x);
  }
  return on_smaller_arc(a.coord, b.coord, x);
}

}  // namespace fedlay
