#pragma once

// Neighbor discovery and maintenance. Each NodeState is owned by exactly one
// event handler; all interaction between nodes is by ProtocolMessage. Every
// function here is a deterministic function of (state, input).

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedlay/coordinates.hpp"
#include "fedlay/types.hpp"

namespace fedlay::ndmp {

enum class MessageKind : std::uint8_t {
  neighbor_discovery = 0,
  discovery_result = 1,
  neighbor_repair = 2,
  repair_result = 3,
  leave_notice = 4,
  heartbeat = 5,
  join_splice = 6,
  neighbor_hint = 7,
};
inline constexpr std::size_t kMessageKinds = 8;

std::string_view to_string(MessageKind kind);

enum class Direction : std::uint8_t { none = 0, cw = 1, ccw = 2 };

enum class Status { joining, active, left, failed };

enum class Side { pred, succ };

// Discovery and repair messages are dropped after this many hops. Unreachable
// on a quiescent correct overlay.
inline constexpr std::uint16_t kHopLimit = 64;

struct PeerInfo {
  NodeId id = 0;
  CoordVector coords;

  friend bool operator==(const PeerInfo&, const PeerInfo&) = default;
};

// `origin` is the node the message is about: the joiner for discovery and
// splices, the terminating node for results, the detector for repairs, the
// leaver for leave notices and the sender for heartbeats and hints. `peer`
// carries the second adjacent node in a DiscoveryResult, the node to splice
// in for a LeaveNotice and the suggested adjacent in a NeighborHint.
struct ProtocolMessage {
  MessageKind kind = MessageKind::heartbeat;
  std::uint16_t space = 0;
  Coord target;
  PeerInfo origin;
  Direction direction = Direction::none;
  std::uint16_t hop_count = 0;
  std::optional<PeerInfo> peer;
  NodeId to = 0;  // transport destination, not part of the wire record

  friend bool operator==(const ProtocolMessage&,
                         const ProtocolMessage&) = default;
};

struct NeighborEntry {
  NodeId id = 0;
  CoordVector coords;
  SimTime last_heartbeat = 0;
  // Filled by the model exchange layer.
  double confidence = 0.0;
  std::optional<std::uint64_t> model_fingerprint;
};

// Believed ring predecessor / successor in one space.
struct RingSlots {
  std::optional<NodeId> pred;
  std::optional<NodeId> succ;
};

class NodeState {
 public:
  NodeState(NodeId id, CoordVector coords, SimTime heartbeat_period);

  NodeId id() const { return id_; }
  const CoordVector& coords() const { return coords_; }
  std::size_t spaces() const { return coords_.size(); }
  PeerInfo self_info() const { return {id_, coords_}; }

  Status status = Status::joining;
  SimTime heartbeat_period;

  // The neighbor table is exactly the union of the ring slots.
  const std::map<NodeId, NeighborEntry>& neighbors() const { return neighbors_; }
  NeighborEntry* find(NodeId id);
  const NeighborEntry* find(NodeId id) const;
  std::set<NodeId> neighbor_ids() const;

  // Spaces in which `id` is currently believed adjacent.
  std::set<std::size_t> spaces_of(NodeId id) const;

  const RingSlots& slots(std::size_t space) const { return slots_.at(space); }
  std::optional<PeerInfo> adjacent(std::size_t space, Side side) const;

  // Installs `candidate` as predecessor and/or successor in `space` when it
  // is strictly closer on that side than the current occupant (or the slot
  // is empty). A displaced occupant loses the slot and is dropped once it
  // holds none. Returns true if any slot changed. Displaced occupants are
  // appended to `displaced` when given.
  bool offer_adjacent(std::size_t space, const PeerInfo& candidate, SimTime now,
                      std::vector<PeerInfo>* displaced = nullptr);

  // Clears every slot `id` holds and drops its entry. Returns the slots it
  // held.
  std::vector<std::pair<std::size_t, Side>> remove_neighbor(NodeId id);

  // Clears the slots `id` holds in one space only.
  void remove_from_space(NodeId id, std::size_t space);
  // A node that announced its departure is never offered a slot again, even if
  // one of its earlier messages arrives after the notice.
  void mark_departed(NodeId id) { departed_.insert(id); }
  bool departed(NodeId id) const { return departed_.count(id) > 0; }

  bool discovered(std::size_t space) const { return discovered_.at(space); }
  void mark_discovered(std::size_t space) { discovered_.at(space) = true; }
  bool all_discovered() const;

  void clear();

 private:
  void set_slot(std::size_t space, Side side, const PeerInfo& peer, SimTime now,
                std::vector<PeerInfo>* displaced);
  void drop_if_unused(NodeId id);

  NodeId id_;
  CoordVector coords_;
  std::map<NodeId, NeighborEntry> neighbors_;
  std::vector<RingSlots> slots_;
  std::vector<bool> discovered_;
  std::set<NodeId> departed_;
};

enum class RouteAction { forward, terminate };

struct RouteDecision {
  RouteAction action = RouteAction::terminate;
  NodeId next_hop = 0;
  // Routing metric at the current node and at next_hop (forward only):
  // circular distance for discovery, directional arc length for repair.
  double metric_here = 0.0;
  double metric_next = 0.0;
  // Discovery termination: the adjacent node on the far side of the target.
  std::optional<PeerInfo> adjacent;
};

// Greedy step towards msg.target in msg.space: forward to the neighbor with
// the smallest circular distance (ties to the smaller id) if it is strictly
// closer than `at`; otherwise terminate at `at`, reporting the adjacent node
// of `at` such that the target falls between the two. The joining node
// itself is never a candidate.
RouteDecision route_discovery(const NodeState& at, const ProtocolMessage& msg);

// Arc length from `from` to `target` travelling in `dir`, mapped into (0, 1]:
// a node sitting exactly on the target is the worst candidate, not the best.
double repair_metric(Coord from, Coord target, Direction dir);

// Directional greedy step: forward to the neighbor with the smallest
// repair_metric if it improves on `at`, else terminate at `at`.
RouteDecision route_repair(const NodeState& at, const ProtocolMessage& msg);

struct HandleResult {
  std::vector<ProtocolMessage> out;
  bool became_active = false;
  bool dropped_hop_limit = false;
  std::vector<NodeId> detected_failures;
  // Set for discovery and repair messages that were routed at this node.
  std::optional<RouteDecision> decision;
};

// One NeighborDiscovery per space, addressed to the bootstrap. Throws
// ParameterError if the joiner is not joining or bootstraps through itself.
std::vector<ProtocolMessage> initiate_join(NodeState& joiner, NodeId bootstrap);

// Tells both adjacent nodes in every space to adopt each other; marks the
// leaver as left and clears its table.
std::vector<ProtocolMessage> initiate_leave(NodeState& leaver);

// Declares neighbors silent for more than 3T failed, removes them, starts a
// directional repair for every slot they held, then heartbeats the rest.
// Joining nodes take part so that peers which already spliced them in keep
// hearing from them.
HandleResult heartbeat_tick(NodeState& node, SimTime now);

// cw and ccw NeighborRepair towards the node's own coordinate in every space.
std::vector<ProtocolMessage> periodic_self_repair(NodeState& node, SimTime now);

HandleResult handle_message(NodeState& node, const ProtocolMessage& msg,
                            SimTime now);

// The transport reported that `msg` could not be delivered to `peer`
// (connection reset). The peer is treated as failed on the spot, and a
// discovery or repair message in transit is routed again without it.
HandleResult handle_unreachable(NodeState& node, NodeId peer,
                                const ProtocolMessage& msg, SimTime now);

// Correct overlay for the given population, every node active.
std::map<NodeId, NodeState> install_correct_overlay(
    const std::map<NodeId, CoordVector>& coords, SimTime heartbeat_period,
    SimTime now = 0);

// One-line human readable rendering used by the trace log.
std::string describe(const ProtocolMessage& msg);

// Length-prefixed little-endian record:
//   u32 length | u8 kind | u16 space | f64 target | u64 origin_id |
//   f64 x L origin_coords | u8 direction | u16 hop_count |
//   u8 has_peer [| u64 peer_id | f64 x L peer_coords]
// `length` counts the bytes after itself.
std::vector<std::uint8_t> encode(const ProtocolMessage& msg);

// Decodes one record for a network with `spaces` ring spaces. Throws
// ProtocolError on truncated or malformed input.
ProtocolMessage decode(const std::vector<std::uint8_t>& bytes,
                       std::size_t spaces);

std::size_t wire_size(std::size_t spaces, bool has_peer);

}  // namespace fedlay::ndmp
