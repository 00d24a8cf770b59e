#include "fedlay/ndmp.hpp"

#include <algorithm>
#include <sstream>

#include "fedlay/graph.hpp"

namespace fedlay::ndmp {

namespace {

// Position of `other` as seen walking clockwise from `self`, as a sortable
// key. Equal coordinates follow the (coordinate, id) ring order.
std::pair<double, NodeId> cw_key(const RingPoint& self, const RingPoint& other) {
  double arc = cw_arc_length(self.coord, other.coord);
  if (arc == 0.0) arc = other.id > self.id ? 0.0 : 1.0;
  return {arc, other.id};
}

std::pair<double, NodeId> ccw_key(const RingPoint& self, const RingPoint& other) {
  double arc = ccw_arc_length(self.coord, other.coord);
  if (arc == 0.0) arc = other.id < self.id ? 0.0 : 1.0;
  return {arc, ~other.id};
}

void check_space(const NodeState& node, std::size_t space) {
  if (space >= node.spaces()) {
    throw ProtocolError("space index " + std::to_string(space) +
                        " out of range on node " + std::to_string(node.id()));
  }
}

Direction opposite(Side side) {
  // A missing successor is searched for by walking counterclockwise around
  // the ring, and vice versa.
  return side == Side::succ ? Direction::ccw : Direction::cw;
}

}  // namespace

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::neighbor_discovery: return "NeighborDiscovery";
    case MessageKind::discovery_result: return "DiscoveryResult";
    case MessageKind::neighbor_repair: return "NeighborRepair";
    case MessageKind::repair_result: return "RepairResult";
    case MessageKind::leave_notice: return "LeaveNotice";
    case MessageKind::heartbeat: return "Heartbeat";
    case MessageKind::join_splice: return "JoinSplice";
    case MessageKind::neighbor_hint: return "NeighborHint";
  }
  return "Unknown";
}

NodeState::NodeState(NodeId id, CoordVector coords, SimTime heartbeat_period)
    : heartbeat_period(heartbeat_period),
      id_(id),
      coords_(std::move(coords)),
      slots_(coords_.size()),
      discovered_(coords_.size(), false) {
  if (coords_.empty()) throw ConfigError("node needs at least one ring space");
  if (heartbeat_period <= 0) throw ConfigError("heartbeat period must be positive");
}

NeighborEntry* NodeState::find(NodeId id) {
  auto it = neighbors_.find(id);
  return it == neighbors_.end() ? nullptr : &it->second;
}

const NeighborEntry* NodeState::find(NodeId id) const {
  auto it = neighbors_.find(id);
  return it == neighbors_.end() ? nullptr : &it->second;
}

std::set<NodeId> NodeState::neighbor_ids() const {
  std::set<NodeId> out;
  for (const auto& [id, entry] : neighbors_) out.insert(id);
  return out;
}

std::set<std::size_t> NodeState::spaces_of(NodeId id) const {
  std::set<std::size_t> out;
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    if (slots_[s].pred == id || slots_[s].succ == id) out.insert(s);
  }
  return out;
}

std::optional<PeerInfo> NodeState::adjacent(std::size_t space, Side side) const {
  const auto& slot = side == Side::pred ? slots_.at(space).pred
                                        : slots_.at(space).succ;
  if (!slot) return std::nullopt;
  const NeighborEntry* e = find(*slot);
  return PeerInfo{e->id, e->coords};
}

bool NodeState::all_discovered() const {
  return std::all_of(discovered_.begin(), discovered_.end(),
                     [](bool b) { return b; });
}

void NodeState::set_slot(std::size_t space, Side side, const PeerInfo& peer,
                         SimTime now, std::vector<PeerInfo>* displaced) {
  auto& slot = side == Side::pred ? slots_[space].pred : slots_[space].succ;
  const std::optional<NodeId> old = slot;
  if (displaced && old && *old != peer.id) {
    displaced->push_back({*old, neighbors_.at(*old).coords});
  }
  slot = peer.id;
  auto [it, inserted] = neighbors_.try_emplace(peer.id);
  if (inserted) {
    it->second.id = peer.id;
    it->second.coords = peer.coords;
    it->second.last_heartbeat = now;
  }
  if (old && *old != peer.id) drop_if_unused(*old);
}

void NodeState::drop_if_unused(NodeId id) {
  for (const auto& s : slots_) {
    if (s.pred == id || s.succ == id) return;
  }
  neighbors_.erase(id);
}

bool NodeState::offer_adjacent(std::size_t space, const PeerInfo& candidate,
                               SimTime now, std::vector<PeerInfo>* displaced) {
  check_space(*this, space);
  if (candidate.id == id_ || departed(candidate.id)) return false;
  if (candidate.coords.size() != coords_.size()) {
    throw ProtocolError("peer " + std::to_string(candidate.id) +
                        " has a coordinate vector of the wrong length");
  }
  const RingPoint self{id_, coords_[space]};
  const RingPoint cand{candidate.id, candidate.coords[space]};
  bool changed = false;
  auto point_of = [&](NodeId id) {
    return RingPoint{id, neighbors_.at(id).coords[space]};
  };
  const auto& slots = slots_[space];
  if (!slots.succ ||
      (*slots.succ != cand.id &&
       cw_key(self, cand) < cw_key(self, point_of(*slots.succ)))) {
    set_slot(space, Side::succ, candidate, now, displaced);
    changed = true;
  }
  if (!slots.pred ||
      (*slots.pred != cand.id &&
       ccw_key(self, cand) < ccw_key(self, point_of(*slots.pred)))) {
    set_slot(space, Side::pred, candidate, now, displaced);
    changed = true;
  }
  return changed;
}

std::vector<std::pair<std::size_t, Side>> NodeState::remove_neighbor(NodeId id) {
  std::vector<std::pair<std::size_t, Side>> held;
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    if (slots_[s].pred == id) {
      slots_[s].pred.reset();
      held.emplace_back(s, Side::pred);
    }
    if (slots_[s].succ == id) {
      slots_[s].succ.reset();
      held.emplace_back(s, Side::succ);
    }
  }
  neighbors_.erase(id);
  return held;
}

void NodeState::remove_from_space(NodeId id, std::size_t space) {
  check_space(*this, space);
  if (slots_[space].pred == id) slots_[space].pred.reset();
  if (slots_[space].succ == id) slots_[space].succ.reset();
  drop_if_unused(id);
}

void NodeState::clear() {
  neighbors_.clear();
  for (auto& s : slots_) s = RingSlots{};
}

RouteDecision route_discovery(const NodeState& at, const ProtocolMessage& msg) {
  check_space(at, msg.space);
  const std::size_t space = msg.space;
  const Coord target = msg.target;
  const NodeId joiner = msg.origin.id;

  RouteDecision d;
  d.metric_here = circular_distance(at.coords()[space], target);

  const NeighborEntry* best = nullptr;
  double best_d = 0.0;
  for (const auto& [id, e] : at.neighbors()) {
    if (id == joiner) continue;
    const double cd = circular_distance(e.coords[space], target);
    if (!best || cd < best_d || (cd == best_d && id < best->id)) {
      best = &e;
      best_d = cd;
    }
  }
  if (best && d.metric_here > best_d) {
    d.action = RouteAction::forward;
    d.next_hop = best->id;
    d.metric_next = best_d;
    return d;
  }

  // `at` is the closest node. The joiner goes between `at` and its successor
  // if the target lies clockwise of `at` before the successor, otherwise
  // between its predecessor and `at`.
  d.action = RouteAction::terminate;
  auto succ = at.adjacent(space, Side::succ);
  auto pred = at.adjacent(space, Side::pred);
  if (succ && succ->id == joiner) succ.reset();
  if (pred && pred->id == joiner) pred.reset();
  if (succ && pred) {
    const RingPoint self{at.id(), at.coords()[space]};
    const RingPoint joining{joiner, target};
    const RingPoint s{succ->id, succ->coords[space]};
    d.adjacent = cw_key(self, joining) < cw_key(self, s) ? succ : pred;
  } else if (succ) {
    d.adjacent = succ;
  } else if (pred) {
    d.adjacent = pred;
  }
  return d;
}

double repair_metric(Coord from, Coord target, Direction dir) {
  const double arc = dir == Direction::cw ? cw_arc_length(from, target)
                                          : ccw_arc_length(from, target);
  return arc == 0.0 ? 1.0 : arc;
}

RouteDecision route_repair(const NodeState& at, const ProtocolMessage& msg) {
  check_space(at, msg.space);
  if (msg.direction == Direction::none) {
    throw ProtocolError("NeighborRepair without a direction");
  }
  const std::size_t space = msg.space;
  RouteDecision d;
  d.metric_here = repair_metric(at.coords()[space], msg.target, msg.direction);
  const NeighborEntry* best = nullptr;
  double best_m = 0.0;
  for (const auto& [id, e] : at.neighbors()) {
    const double m = repair_metric(e.coords[space], msg.target, msg.direction);
    if (!best || m < best_m || (m == best_m && id < best->id)) {
      best = &e;
      best_m = m;
    }
  }
  if (best && d.metric_here > best_m) {
    d.action = RouteAction::forward;
    d.next_hop = best->id;
    d.metric_next = best_m;
  }
  return d;
}

namespace {

void process_discovery(NodeState& node, const ProtocolMessage& msg,
                       HandleResult& r) {
  const RouteDecision d = route_discovery(node, msg);
  r.decision = d;
  if (d.action == RouteAction::forward) {
    ProtocolMessage fwd = msg;
    ++fwd.hop_count;
    fwd.to = d.next_hop;
    r.out.push_back(std::move(fwd));
    return;
  }
  ProtocolMessage reply;
  reply.kind = MessageKind::discovery_result;
  reply.space = msg.space;
  reply.target = msg.target;
  reply.origin = node.self_info();
  reply.peer = d.adjacent;
  reply.to = msg.origin.id;
  r.out.push_back(std::move(reply));
}

bool holds_slot(const NodeState& node, std::size_t space, NodeId id) {
  const auto& sl = node.slots(space);
  return sl.pred == id || sl.succ == id;
}

// Offers `cand` and tells every node it displaced about it: the displaced
// node is farther from us than `cand`, so `cand` is closer to it as well.
bool offer_with_hints(NodeState& node, std::size_t space, const PeerInfo& cand,
                      SimTime now, HandleResult& r) {
  std::vector<PeerInfo> displaced;
  const bool changed = node.offer_adjacent(space, cand, now, &displaced);
  for (PeerInfo& d : displaced) {
    if (d.id == cand.id) continue;
    ProtocolMessage m;
    m.kind = MessageKind::neighbor_hint;
    m.space = static_cast<std::uint16_t>(space);
    m.target = cand.coords[space];
    m.origin = node.self_info();
    m.peer = cand;
    m.to = d.id;
    r.out.push_back(std::move(m));
  }
  return changed;
}

ProtocolMessage make_splice(const NodeState& node, std::size_t space, NodeId to) {
  ProtocolMessage m;
  m.kind = MessageKind::join_splice;
  m.space = static_cast<std::uint16_t>(space);
  m.target = node.coords()[space];
  m.origin = node.self_info();
  m.to = to;
  return m;
}

void process_repair(NodeState& node, const ProtocolMessage& msg, SimTime now,
                    HandleResult& r) {
  const RouteDecision d = route_repair(node, msg);
  r.decision = d;
  if (d.action == RouteAction::forward) {
    ProtocolMessage fwd = msg;
    ++fwd.hop_count;
    fwd.to = d.next_hop;
    r.out.push_back(std::move(fwd));
    return;
  }
  if (msg.origin.id == node.id()) return;
  offer_with_hints(node, msg.space, msg.origin, now, r);
  ProtocolMessage reply;
  reply.kind = MessageKind::repair_result;
  reply.space = msg.space;
  reply.target = msg.target;
  reply.origin = node.self_info();
  reply.to = msg.origin.id;
  r.out.push_back(std::move(reply));
}

ProtocolMessage make_repair(const NodeState& node, std::size_t space,
                            Coord target, Direction dir) {
  ProtocolMessage m;
  m.kind = MessageKind::neighbor_repair;
  m.space = static_cast<std::uint16_t>(space);
  m.target = target;
  m.origin = node.self_info();
  m.direction = dir;
  return m;
}

}  // namespace

std::vector<ProtocolMessage> initiate_join(NodeState& joiner, NodeId bootstrap) {
  if (joiner.status != Status::joining) {
    throw ParameterError("node " + std::to_string(joiner.id()) +
                         " is not in the joining state");
  }
  if (bootstrap == joiner.id()) {
    throw ParameterError("node " + std::to_string(joiner.id()) +
                         " cannot bootstrap through itself");
  }
  std::vector<ProtocolMessage> out;
  for (std::size_t s = 0; s < joiner.spaces(); ++s) {
    ProtocolMessage m;
    m.kind = MessageKind::neighbor_discovery;
    m.space = static_cast<std::uint16_t>(s);
    m.target = joiner.coords()[s];
    m.origin = joiner.self_info();
    m.to = bootstrap;
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<ProtocolMessage> initiate_leave(NodeState& leaver) {
  if (leaver.status != Status::active) {
    throw ParameterError("only an active node can leave");
  }
  std::vector<ProtocolMessage> out;
  for (std::size_t s = 0; s < leaver.spaces(); ++s) {
    const auto pred = leaver.adjacent(s, Side::pred);
    const auto succ = leaver.adjacent(s, Side::succ);
    auto notice = [&](const PeerInfo& to, const std::optional<PeerInfo>& other) {
      ProtocolMessage m;
      m.kind = MessageKind::leave_notice;
      m.space = static_cast<std::uint16_t>(s);
      m.target = leaver.coords()[s];
      m.origin = leaver.self_info();
      if (other && other->id != to.id) m.peer = other;
      m.to = to.id;
      out.push_back(std::move(m));
    };
    if (pred) notice(*pred, succ);
    if (succ && (!pred || succ->id != pred->id)) notice(*succ, pred);
  }
  leaver.status = Status::left;
  leaver.clear();
  return out;
}

namespace {

void declare_failed(NodeState& node, NodeId dead, SimTime now, HandleResult& r) {
  const NeighborEntry* e = node.find(dead);
  if (!e) return;
  const CoordVector coords = e->coords;
  const auto held = node.remove_neighbor(dead);
  r.detected_failures.push_back(dead);
  for (const auto& [space, side] : held) {
    HandleResult local;
    process_repair(node, make_repair(node, space, coords[space], opposite(side)),
                   now, local);
    for (auto& m : local.out) r.out.push_back(std::move(m));
  }
}

}  // namespace

HandleResult heartbeat_tick(NodeState& node, SimTime now) {
  HandleResult r;
  if (node.status != Status::active && node.status != Status::joining) return r;
  const SimTime limit = 3 * node.heartbeat_period;
  std::vector<NodeId> silent;
  for (const auto& [id, e] : node.neighbors()) {
    if (now - e.last_heartbeat > limit) silent.push_back(id);
  }
  for (NodeId dead : silent) declare_failed(node, dead, now, r);
  for (const auto& [id, e] : node.neighbors()) {
    ProtocolMessage hb;
    hb.kind = MessageKind::heartbeat;
    hb.origin = node.self_info();
    hb.to = id;
    r.out.push_back(std::move(hb));
  }
  return r;
}

std::vector<ProtocolMessage> periodic_self_repair(NodeState& node, SimTime now) {
  std::vector<ProtocolMessage> out;
  if (node.status != Status::active) return out;
  for (std::size_t s = 0; s < node.spaces(); ++s) {
    for (Direction dir : {Direction::ccw, Direction::cw}) {
      HandleResult local;
      process_repair(node, make_repair(node, s, node.coords()[s], dir), now,
                     local);
      for (auto& m : local.out) out.push_back(std::move(m));
    }
  }
  return out;
}

HandleResult handle_message(NodeState& node, const ProtocolMessage& msg,
                            SimTime now) {
  HandleResult r;
  if (node.status == Status::left || node.status == Status::failed) return r;
  switch (msg.kind) {
    case MessageKind::neighbor_discovery:
      if (msg.hop_count > kHopLimit) {
        r.dropped_hop_limit = true;
        return r;
      }
      process_discovery(node, msg, r);
      break;
    case MessageKind::neighbor_repair:
      if (msg.hop_count > kHopLimit) {
        r.dropped_hop_limit = true;
        return r;
      }
      process_repair(node, msg, now, r);
      break;
    case MessageKind::discovery_result: {
      // Also sent by a splice receiver to point the joiner at a closer node.
      check_space(node, msg.space);
      const std::size_t space = msg.space;
      for (const PeerInfo* cand : {&msg.origin, msg.peer ? &*msg.peer : nullptr}) {
        if (!cand || cand->id == node.id()) continue;
        const bool had = holds_slot(node, space, cand->id);
        node.offer_adjacent(space, *cand, now);
        if (!had && holds_slot(node, space, cand->id)) {
          r.out.push_back(make_splice(node, space, cand->id));
        }
      }
      if (node.status == Status::joining) {
        node.mark_discovered(space);
        if (node.all_discovered()) {
          node.status = Status::active;
          r.became_active = true;
        }
      }
      break;
    }
    case MessageKind::join_splice: {
      check_space(node, msg.space);
      const std::size_t space = msg.space;
      node.offer_adjacent(space, msg.origin, now);
      if (holds_slot(node, space, msg.origin.id)) break;
      // Rejected: a node between us and the sender holds the slot on the
      // sender's side. Tell the sender about it.
      const Coord here = node.coords()[space];
      const Coord there = msg.origin.coords[space];
      const Side side = cw_arc_length(here, there) <= ccw_arc_length(here, there)
                            ? Side::succ
                            : Side::pred;
      auto closer = node.adjacent(space, side);
      if (!closer || closer->id == msg.origin.id) break;
      ProtocolMessage m;
      m.kind = MessageKind::neighbor_hint;
      m.space = msg.space;
      m.target = closer->coords[space];
      m.origin = node.self_info();
      m.peer = std::move(closer);
      m.to = msg.origin.id;
      r.out.push_back(std::move(m));
      break;
    }
    case MessageKind::neighbor_hint: {
      check_space(node, msg.space);
      if (!msg.peer || msg.peer->id == node.id()) break;
      const bool had = holds_slot(node, msg.space, msg.peer->id);
      offer_with_hints(node, msg.space, *msg.peer, now, r);
      if (!had && holds_slot(node, msg.space, msg.peer->id)) {
        r.out.push_back(make_splice(node, msg.space, msg.peer->id));
      }
      break;
    }
    case MessageKind::repair_result:
      check_space(node, msg.space);
      offer_with_hints(node, msg.space, msg.origin, now, r);
      break;
    case MessageKind::leave_notice:
      check_space(node, msg.space);
      node.mark_departed(msg.origin.id);
      node.remove_from_space(msg.origin.id, msg.space);
      if (msg.peer && msg.peer->id != node.id()) {
        offer_with_hints(node, msg.space, *msg.peer, now, r);
      }
      break;
    case MessageKind::heartbeat: {
      if (msg.origin.coords.size() != node.spaces()) break;
      if (NeighborEntry* e = node.find(msg.origin.id)) {
        e->last_heartbeat = std::max(e->last_heartbeat, now);
        for (std::size_t s = 0; s < node.spaces(); ++s) {
          offer_with_hints(node, s, msg.origin, now, r);
        }
        break;
      }
      // The sender believes we are adjacent but we do not list it. If it is
      // closer than what we hold on some side it is the better adjacent.
      bool taken = false;
      for (std::size_t s = 0; s < node.spaces(); ++s) {
        taken |= offer_with_hints(node, s, msg.origin, now, r);
      }
      if (taken) break;
      // Otherwise point it at the node we hold on its side.
      for (std::size_t s = 0; s < node.spaces(); ++s) {
        const Coord here = node.coords()[s];
        const Coord there = msg.origin.coords[s];
        const Side side = cw_arc_length(here, there) <= ccw_arc_length(here, there)
                              ? Side::succ
                              : Side::pred;
        auto closer = node.adjacent(s, side);
        if (!closer || closer->id == msg.origin.id) continue;
        ProtocolMessage m;
        m.kind = MessageKind::neighbor_hint;
        m.space = static_cast<std::uint16_t>(s);
        m.target = closer->coords[s];
        m.origin = node.self_info();
        m.peer = std::move(closer);
        m.to = msg.origin.id;
        r.out.push_back(std::move(m));
      }
      break;
    }
  }
  return r;
}

HandleResult handle_unreachable(NodeState& node, NodeId peer,
                                const ProtocolMessage& msg, SimTime now) {
  HandleResult r;
  if (node.status != Status::active && node.status != Status::joining) return r;
  declare_failed(node, peer, now, r);
  const bool routed = msg.kind == MessageKind::neighbor_discovery ||
                      msg.kind == MessageKind::neighbor_repair;
  // A joiner whose bootstrap is gone has nothing to route with; its join is
  // restarted by the caller.
  const bool own_join = msg.kind == MessageKind::neighbor_discovery &&
                        msg.origin.id == node.id();
  if (routed && !own_join) {
    HandleResult again = handle_message(node, msg, now);
    for (auto& m : again.out) r.out.push_back(std::move(m));
    r.dropped_hop_limit = again.dropped_hop_limit;
    r.decision = again.decision;
  }
  return r;
}

std::map<NodeId, NodeState> install_correct_overlay(
    const std::map<NodeId, CoordVector>& coords, SimTime heartbeat_period,
    SimTime now) {
  std::map<NodeId, NodeState> nodes;
  for (const auto& [id, cv] : coords) {
    auto [it, inserted] = nodes.try_emplace(id, id, cv, heartbeat_period);
    it->second.status = Status::active;
    for (std::size_t s = 0; s < cv.size(); ++s) it->second.mark_discovered(s);
  }
  if (coords.size() < 2) return nodes;
  const std::size_t spaces = coords.begin()->second.size();
  for (std::size_t s = 0; s < spaces; ++s) {
    const auto order = topo::ring_order(coords, s);
    const std::size_t n = order.size();
    for (std::size_t i = 0; i < n; ++i) {
      NodeState& node = nodes.at(order[i]);
      const NodeId next = order[(i + 1) % n];
      const NodeId prev = order[(i + n - 1) % n];
      node.offer_adjacent(s, {next, coords.at(next)}, now);
      node.offer_adjacent(s, {prev, coords.at(prev)}, now);
    }
  }
  return nodes;
}

std::string describe(const ProtocolMessage& msg) {
  std::ostringstream os;
  os << "kind=" << to_string(msg.kind) << " to=" << msg.to
     << " origin=" << msg.origin.id;
  if (msg.kind != MessageKind::heartbeat) {
    os << " space=" << msg.space << " target=" << msg.target.value();
  }
  if (msg.direction != Direction::none) {
    os << " dir=" << (msg.direction == Direction::cw ? "cw" : "ccw");
  }
  if (msg.hop_count) os << " hops=" << msg.hop_count;
  if (msg.peer) os << " peer=" << msg.peer->id;
  return os.str();
}

}  // namespace fedlay::ndmp
