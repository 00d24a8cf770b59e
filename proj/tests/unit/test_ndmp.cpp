#include <gtest/gtest.h>

#include <deque>

#include "fedlay/correctness.hpp"
#include "fedlay/ndmp.hpp"
#include "ring_walk.hpp"

using namespace fedlay;
using namespace fedlay::ndmp;
using fedlay::testkit::States;

namespace {

constexpr SimTime kT = 1000;

// Delivers messages in FIFO order, instantly, until none are left.
struct Pump {
  States& states;
  SimTime now = 0;
  std::array<std::size_t, kMessageKinds> delivered{};

  void run(std::vector<ProtocolMessage> msgs) {
    std::deque<ProtocolMessage> q(msgs.begin(), msgs.end());
    std::size_t guard = 0;
    while (!q.empty()) {
      ASSERT_LT(++guard, 1000000u);
      ProtocolMessage m = q.front();
      q.pop_front();
      auto it = states.find(m.to);
      if (it == states.end()) continue;
      ++delivered[static_cast<std::size_t>(m.kind)];
      auto r = handle_message(it->second, m, now);
      for (auto& out : r.out) q.push_back(std::move(out));
    }
  }
};

std::map<NodeId, CoordVector> coords_of(const States& states) {
  std::map<NodeId, CoordVector> out;
  for (const auto& [id, s] : states) {
    if (s.status == Status::active || s.status == Status::joining) out[id] = s.coords();
  }
  return out;
}

double correctness(const States& states) {
  std::map<NodeId, std::set<NodeId>> stored;
  for (const auto& [id, s] : states) {
    if (s.status == Status::active || s.status == Status::joining) stored[id] = s.neighbor_ids();
  }
  return topo::topology_correctness(stored, coords_of(states));
}

NodeId id_at(const States& states, double x) {
  for (const auto& [id, s] : states) {
    if (s.coords()[0] == Coord(x)) return id;
  }
  return 0;
}

States five_ring() {
  return install_correct_overlay(testkit::line_population({0.1, 0.3, 0.5, 0.7, 0.9}), kT);
}

void join(States& states, NodeId id, CoordVector coords, NodeId bootstrap, Pump& pump) {
  auto& joiner = states.emplace(id, NodeState(id, std::move(coords), kT)).first->second;
  pump.run(initiate_join(joiner, bootstrap));
}

}  // namespace

TEST(NodeState, OfferKeepsClosestPerSideAndNeverSelf) {
  NodeState n(1, {Coord(0.5)}, kT);
  std::vector<PeerInfo> displaced;
  EXPECT_TRUE(n.offer_adjacent(0, {2, {Coord(0.8)}}, 0));
  EXPECT_EQ(n.slots(0).succ, 2u);
  EXPECT_EQ(n.slots(0).pred, 2u);
  EXPECT_TRUE(n.offer_adjacent(0, {3, {Coord(0.6)}}, 0, &displaced));
  EXPECT_EQ(n.slots(0).succ, 3u);
  EXPECT_EQ(n.slots(0).pred, 2u);
  // 2 lost its succ slot, so it is reported even though it keeps the pred slot
  ASSERT_EQ(displaced.size(), 1u);
  EXPECT_EQ(displaced[0].id, 2u);
  EXPECT_NE(n.find(2), nullptr);
  displaced.clear();
  EXPECT_FALSE(n.offer_adjacent(0, {4, {Coord(0.7)}}, 0));
  EXPECT_TRUE(n.offer_adjacent(0, {5, {Coord(0.4)}}, 0, &displaced));
  ASSERT_EQ(displaced.size(), 1u);
  EXPECT_EQ(displaced[0].id, 2u);
  EXPECT_EQ(n.find(2), nullptr);
  EXPECT_FALSE(n.offer_adjacent(0, n.self_info(), 0));
  EXPECT_EQ(n.find(1), nullptr);
  EXPECT_EQ(n.neighbor_ids(), (std::set<NodeId>{3, 5}));
}

TEST(NodeState, RemoveReturnsHeldSlots) {
  NodeState n(1, {Coord(0.5), Coord(0.5)}, kT);
  n.offer_adjacent(0, {2, {Coord(0.6), Coord(0.4)}}, 0);
  n.offer_adjacent(1, {2, {Coord(0.6), Coord(0.4)}}, 0);
  EXPECT_EQ(n.spaces_of(2), (std::set<std::size_t>{0, 1}));
  const auto held = n.remove_neighbor(2);
  EXPECT_EQ(held.size(), 4u);
  EXPECT_TRUE(n.neighbors().empty());
}

TEST(RouteDiscovery, FiveRingExample) {
  const auto states = five_ring();
  const auto w = testkit::walk(states, id_at(states, 0.1), testkit::discovery_message(0, Coord(0.62), 1));
  EXPECT_EQ(w.terminal, id_at(states, 0.7));
  ASSERT_TRUE(w.adjacent);
  EXPECT_EQ(w.adjacent->id, id_at(states, 0.5));
  EXPECT_EQ(w.violations, 0u);
}

TEST(RouteDiscovery, TargetOnStartTerminatesImmediately) {
  const auto states = five_ring();
  const auto w = testkit::walk(states, id_at(states, 0.3), testkit::discovery_message(0, Coord(0.3), 1));
  EXPECT_EQ(w.terminal, id_at(states, 0.3));
  EXPECT_EQ(w.hops, 0u);
}

TEST(RouteDiscovery, TwoNodesWithinOneHop) {
  const auto states = install_correct_overlay(testkit::line_population({0.2, 0.6}), kT);
  for (double t = 0.0; t < 1.0; t += 0.01) {
    for (const auto& [start, s] : states) {
      EXPECT_LE(testkit::walk(states, start, testkit::discovery_message(0, Coord(t), 1)).hops, 1u);
    }
  }
}

TEST(RouteDiscovery, MatchesBruteForceClosest) {
  for (std::size_t n = 4; n <= 64; n += 6) {
    for (std::size_t l = 1; l <= 3; ++l) {
      const auto states = install_correct_overlay(testkit::random_population(n, l, 77), kT);
      Rng rng = make_rng(77, "targets", n * 4 + l);
      for (int k = 0; k < 20; ++k) {
        const Coord target(uniform_unit(rng));
        const std::size_t space = uniform_below(rng, l);
        const NodeId oracle = testkit::brute_force_closest(states, space, target);
        for (const auto& [start, s] : states) {
          const auto w = testkit::walk(states, start, testkit::discovery_message(space, target, l));
          ASSERT_EQ(w.terminal, oracle);
          ASSERT_EQ(w.violations, 0u);
          ASSERT_TRUE(w.adjacent);
          // the reported pair is ring-consecutive and the target falls in its gap
          const bool ahead = testkit::ring_neighbor(states, space, w.terminal, Side::succ, 0) == w.adjacent->id;
          const NodeId lo = ahead ? w.terminal : w.adjacent->id;
          const NodeId hi = ahead ? w.adjacent->id : w.terminal;
          ASSERT_EQ(testkit::ring_neighbor(states, space, lo, Side::succ, 0), hi);
          const Coord lo_x = states.at(lo).coords()[space];
          ASSERT_LT(cw_arc_length(lo_x, target), cw_arc_length(lo_x, states.at(hi).coords()[space]));
        }
      }
    }
  }
}

TEST(RouteDiscovery, JoinPathsGrowSlowly) {
  const std::size_t n = 500;
  const auto states = install_correct_overlay(testkit::random_population(n, 5, 3), kT);
  Rng rng = make_rng(3, "hops");
  std::vector<NodeId> ids;
  for (const auto& [id, s] : states) ids.push_back(id);
  double hops = 0;
  const int trials = 2000;
  for (int k = 0; k < trials; ++k) {
    const auto w = testkit::walk(states, ids[uniform_below(rng, n)],
                                 testkit::discovery_message(uniform_below(rng, 5), Coord(uniform_unit(rng)), 5));
    hops += static_cast<double>(w.hops);
  }
  EXPECT_LT(hops / trials, static_cast<double>(n) / 4);
  EXPECT_LT(hops / trials, 12.0);
}

TEST(RouteRepair, FiveRingExamples) {
  auto states = five_ring();
  const auto cases = testkit::repair_after_failure(states, id_at(states, 0.5));
  ASSERT_EQ(cases.size(), 2u);
  for (const auto& c : cases) {
    const NodeId other = c.detector == id_at(states, 0.3) ? id_at(states, 0.7) : id_at(states, 0.3);
    EXPECT_EQ(c.walk.terminal, other);
    EXPECT_EQ(c.expected, other);
    EXPECT_EQ(c.walk.violations, 0u);
  }
}

TEST(RouteRepair, ThreeRingSurvivorsInOneHop) {
  auto states = install_correct_overlay(testkit::line_population({0.1, 0.4, 0.8}), kT);
  for (NodeId dead = 1; dead <= 3; ++dead) {
    for (const auto& c : testkit::repair_after_failure(states, dead)) {
      EXPECT_EQ(c.walk.terminal, c.expected);
      EXPECT_LE(c.walk.hops, 1u);
    }
  }
}

TEST(RouteRepair, TerminatesAtOtherPriorAdjacent) {
  for (std::size_t n : {4u, 9u, 25u, 60u}) {
    for (std::size_t l = 1; l <= 4; ++l) {
      auto states = install_correct_overlay(testkit::random_population(n, l, 5), kT);
      std::vector<NodeId> ids;
      for (const auto& [id, s] : states) ids.push_back(id);
      for (NodeId dead : ids) {
        for (const auto& c : testkit::repair_after_failure(states, dead)) {
          ASSERT_FALSE(c.walk.hop_limit);
          ASSERT_EQ(c.walk.terminal, c.expected) << "n=" << n << " L=" << l;
          ASSERT_EQ(c.walk.violations, 0u);
        }
      }
    }
  }
}

TEST(RouteRepair, RequiresDirection) {
  const auto states = five_ring();
  ProtocolMessage m;
  m.kind = MessageKind::neighbor_repair;
  EXPECT_THROW(route_repair(states.begin()->second, m), ProtocolError);
}

TEST(Join, RejectsSelfBootstrapAndWrongState) {
  NodeState n(4, {Coord(0.2)}, kT);
  EXPECT_THROW(initiate_join(n, 4), ParameterError);
  n.status = Status::active;
  EXPECT_THROW(initiate_join(n, 5), ParameterError);
}

TEST(Join, IntoTwoNodeNetwork) {
  auto coords = testkit::random_population(3, 2, 21);
  const auto joiner = *coords.begin();
  coords.erase(coords.begin());
  States states = install_correct_overlay(coords, kT);
  Pump pump{states};
  const auto msgs = [&] {
    auto& j = states.emplace(joiner.first, NodeState(joiner.first, joiner.second, kT)).first->second;
    return initiate_join(j, coords.begin()->first);
  }();
  EXPECT_EQ(msgs.size(), 2u);
  pump.run(msgs);
  EXPECT_EQ(pump.delivered[static_cast<std::size_t>(MessageKind::discovery_result)], 2u);
  const auto& j = states.at(joiner.first);
  EXPECT_EQ(j.status, Status::active);
  EXPECT_GE(j.neighbors().size(), 2u);
  EXPECT_LE(j.neighbors().size(), 4u);
  EXPECT_EQ(correctness(states), 1.0);
}

TEST(Join, StraddlingPairReported) {
  auto states = five_ring();
  Pump pump{states};
  join(states, 42, {Coord(0.15)}, id_at(states, 0.7), pump);
  EXPECT_EQ(states.at(42).neighbor_ids(), (std::set<NodeId>{id_at(states, 0.1), id_at(states, 0.3)}));
  EXPECT_EQ(correctness(states), 1.0);
}

TEST(Join, SingleJoinKeepsOverlayCorrect) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto coords = testkit::random_population(40, 4, seed);
    States states = install_correct_overlay(coords, kT);
    Pump pump{states};
    Rng rng = make_rng(seed, "joins");
    for (int k = 0; k < 20; ++k) {
      const NodeId id = (rng() | 1u) ^ 2u;
      if (states.count(id)) continue;
      std::vector<NodeId> ids;
      for (const auto& [i, s] : states) ids.push_back(i);
      join(states, id, derive_coords(id, 4), ids[uniform_below(rng, ids.size())], pump);
      ASSERT_EQ(states.at(id).status, Status::active);
      ASSERT_EQ(correctness(states), 1.0) << "seed " << seed << " join " << k;
    }
  }
}

TEST(Leave, SplicesAdjacentPairs) {
  // G at 0.5 in both spaces; space 0 neighbors A(0.4)/D(0.6), space 1 F(0.45)/C(0.55)
  std::map<NodeId, CoordVector> coords{
      {7, {Coord(0.5), Coord(0.5)}},   {1, {Coord(0.4), Coord(0.9)}},  {4, {Coord(0.6), Coord(0.1)}},
      {6, {Coord(0.2), Coord(0.45)}},  {3, {Coord(0.8), Coord(0.55)}},
  };
  States states = install_correct_overlay(coords, kT);
  Pump pump{states};
  pump.run(initiate_leave(states.at(7)));
  EXPECT_EQ(states.at(7).status, Status::left);
  EXPECT_TRUE(states.at(7).neighbors().empty());
  EXPECT_EQ(states.at(1).slots(0).succ, 4u);
  EXPECT_EQ(states.at(4).slots(0).pred, 1u);
  EXPECT_EQ(states.at(6).slots(1).succ, 3u);
  EXPECT_EQ(states.at(3).slots(1).pred, 6u);
  EXPECT_EQ(correctness(states), 1.0);
}

TEST(Leave, TwoNodeNetworkLeavesSurvivorEmpty) {
  States states = install_correct_overlay(testkit::line_population({0.2, 0.7}), kT);
  Pump pump{states};
  pump.run(initiate_leave(states.at(1)));
  EXPECT_TRUE(states.at(2).neighbors().empty());
}

TEST(Leave, BilateralNeighborAppliesBothNotices) {
  // node 2 is the successor of node 1 in both spaces
  std::map<NodeId, CoordVector> coords{
      {1, {Coord(0.5), Coord(0.5)}}, {2, {Coord(0.6), Coord(0.6)}},
      {3, {Coord(0.3), Coord(0.1)}}, {4, {Coord(0.9), Coord(0.3)}},
  };
  States states = install_correct_overlay(coords, kT);
  Pump pump{states};
  pump.run(initiate_leave(states.at(1)));
  EXPECT_GE(pump.delivered[static_cast<std::size_t>(MessageKind::leave_notice)], 2u);
  EXPECT_EQ(correctness(states), 1.0);
}

TEST(Leave, HeartbeatOvertakenByNoticeDoesNotReadmit) {
  States states = five_ring();
  const NodeId leaver = id_at(states, 0.5);
  const PeerInfo info = states.at(leaver).self_info();
  Pump pump{states};
  pump.run(initiate_leave(states.at(leaver)));
  ASSERT_EQ(correctness(states), 1.0);
  for (double x : {0.3, 0.7}) {
    ProtocolMessage hb;
    hb.kind = MessageKind::heartbeat;
    hb.origin = info;
    hb.to = id_at(states, x);
    pump.run({hb});
    EXPECT_EQ(states.at(hb.to).find(leaver), nullptr);
  }
  EXPECT_EQ(correctness(states), 1.0);
}

TEST(Leave, SingleLeavesKeepOverlayCorrect) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    States states = install_correct_overlay(testkit::random_population(40, 3, seed), kT);
    Pump pump{states};
    std::vector<NodeId> ids;
    for (const auto& [id, s] : states) ids.push_back(id);
    for (std::size_t k = 0; k + 3 < ids.size(); k += 2) {
      pump.run(initiate_leave(states.at(ids[k])));
      ASSERT_EQ(correctness(states), 1.0) << "seed " << seed;
    }
  }
}

TEST(Heartbeat, ThresholdIsThreePeriods) {
  States states = five_ring();
  auto& n = states.at(id_at(states, 0.3));
  auto quiet = heartbeat_tick(n, 3 * kT);
  EXPECT_TRUE(quiet.detected_failures.empty());
  EXPECT_EQ(quiet.out.size(), 2u);
  for (const auto& m : quiet.out) EXPECT_EQ(m.kind, MessageKind::heartbeat);

  auto at29 = heartbeat_tick(n, 29 * kT / 10);
  EXPECT_TRUE(at29.detected_failures.empty());

  n.find(id_at(states, 0.1))->last_heartbeat = 3 * kT;  // only 0.5 stays silent
  auto r = heartbeat_tick(n, 3 * kT + 1);
  ASSERT_EQ(r.detected_failures.size(), 1u);
  EXPECT_EQ(r.detected_failures[0], id_at(states, 0.5));
  EXPECT_EQ(n.find(id_at(states, 0.5)), nullptr);
}

TEST(Heartbeat, DoubleFailureRepairsEachSharedSpace) {
  States states = install_correct_overlay(testkit::random_population(30, 3, 9), kT);
  auto& n = states.begin()->second;
  const auto ids = n.neighbor_ids();
  ASSERT_GE(ids.size(), 2u);
  const NodeId a = *ids.begin(), b = *std::next(ids.begin());
  std::size_t slots = 0;
  for (std::size_t s = 0; s < n.spaces(); ++s) {
    for (NodeId x : {a, b}) slots += (n.slots(s).pred == x) + (n.slots(s).succ == x);
  }
  for (auto& [id, e] : n.neighbors()) {
    if (id != a && id != b) n.find(id)->last_heartbeat = 10 * kT;
  }
  const auto r = heartbeat_tick(n, 10 * kT);
  EXPECT_EQ(r.detected_failures.size(), 2u);
  // every repair either leaves as a NeighborRepair or terminated locally
  std::size_t repairs = 0;
  for (const auto& m : r.out) repairs += m.kind == MessageKind::neighbor_repair;
  EXPECT_LE(repairs, slots);
  EXPECT_GE(repairs, 1u);
}

TEST(Heartbeat, FailureThenRepairRestoresCorrectness) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    States states = install_correct_overlay(testkit::random_population(30, 3, seed), kT);
    Pump pump{states};
    std::vector<NodeId> ids;
    for (const auto& [id, s] : states) ids.push_back(id);
    for (std::size_t k = 0; k + 3 < ids.size(); k += 3) {
      states.at(ids[k]).status = Status::failed;
      states.at(ids[k]).clear();
      pump.now += 4 * kT;
      std::vector<ProtocolMessage> out;
      for (auto& [id, s] : states) {
        if (s.status != Status::active) continue;
        for (auto& [nid, e] : s.neighbors()) {
          if (nid != ids[k]) s.find(nid)->last_heartbeat = pump.now;
        }
        auto r = heartbeat_tick(s, pump.now);
        for (auto& m : r.out) {
          if (m.kind != MessageKind::heartbeat) out.push_back(std::move(m));
        }
      }
      pump.run(out);
      states.erase(ids[k]);
      ASSERT_EQ(correctness(states), 1.0) << "seed " << seed;
    }
  }
}

TEST(SelfRepair, NoOpOnCorrectNetwork) {
  States states = install_correct_overlay(testkit::random_population(50, 4, 4), kT);
  std::map<NodeId, std::set<NodeId>> before;
  for (const auto& [id, s] : states) before[id] = s.neighbor_ids();
  Pump pump{states};
  for (auto& [id, s] : states) pump.run(periodic_self_repair(s, 0));
  for (const auto& [id, s] : states) EXPECT_EQ(s.neighbor_ids(), before[id]);
}

TEST(SelfRepair, FixesInterleavedConcurrentJoins) {
  // Two joiners land in the same gap; each learns only the original pair.
  States states = install_correct_overlay(testkit::line_population({0.1, 0.5, 0.9}), kT);
  for (auto [id, x] : {std::pair<NodeId, double>{10, 0.2}, {11, 0.3}}) {
    NodeState j(id, {Coord(x)}, kT);
    j.offer_adjacent(0, states.at(1).self_info(), 0);
    j.offer_adjacent(0, states.at(2).self_info(), 0);
    j.status = Status::active;
    states.emplace(id, j);
  }
  states.at(1).offer_adjacent(0, states.at(10).self_info(), 0);
  states.at(2).offer_adjacent(0, states.at(11).self_info(), 0);
  EXPECT_LT(correctness(states), 1.0);
  Pump pump{states};
  for (int period = 0; period < 2; ++period) {
    for (auto& [id, s] : states) pump.run(periodic_self_repair(s, 0));
  }
  EXPECT_EQ(correctness(states), 1.0);
}

TEST(Wire, RoundTrip) {
  ProtocolMessage m;
  m.kind = MessageKind::discovery_result;
  m.space = 3;
  m.target = Coord(0.625);
  m.origin = {123456789, {Coord(0.1), Coord(0.2), Coord(0.3), Coord(0.4)}};
  m.hop_count = 7;
  m.peer = PeerInfo{42, {Coord(0.9), Coord(0.8), Coord(0.7), Coord(0.6)}};
  const auto bytes = encode(m);
  EXPECT_EQ(bytes.size(), wire_size(4, true));
  EXPECT_EQ(decode(bytes, 4), m);

  ProtocolMessage r;
  r.kind = MessageKind::neighbor_repair;
  r.direction = Direction::ccw;
  r.origin = {5, {Coord(0.5)}};
  EXPECT_EQ(encode(r).size(), wire_size(1, false));
  EXPECT_EQ(decode(encode(r), 1), r);
}

TEST(Wire, MalformedInputRejected) {
  ProtocolMessage m;
  m.origin = {5, {Coord(0.5), Coord(0.25)}};
  auto bytes = encode(m);
  auto cut = bytes;
  cut.pop_back();
  EXPECT_THROW(decode(cut, 2), ProtocolError);
  EXPECT_THROW(decode(bytes, 3), ProtocolError);
  auto bad_kind = bytes;
  bad_kind[4] = 200;
  EXPECT_THROW(decode(bad_kind, 2), ProtocolError);
  EXPECT_THROW(decode({}, 2), ProtocolError);
}

TEST(Trace, DescribeNamesKind) {
  ProtocolMessage m;
  m.kind = MessageKind::leave_notice;
  m.origin = {9, {Coord(0.5)}};
  EXPECT_NE(describe(m).find("LeaveNotice"), std::string::npos);
}
