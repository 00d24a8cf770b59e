#include "fedlay/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <tuple>

#include "fedlay/correctness.hpp"

namespace fedlay::sim {

using ndmp::Status;

// ---------------------------------------------------------------- latency

LatencyModel LatencyModel::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  auto num = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      const double v = std::stod(parts.at(i), &used);
      if (used != parts[i].size()) throw std::invalid_argument("junk");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad latency model '" + text + "'");
    }
  };
  LatencyModel m;
  if (parts.size() == 2 && parts[0] == "fixed") {
    m = fixed(num(1));
  } else if (parts.size() == 3 && parts[0] == "uniform") {
    m = uniform(num(1), num(2));
  } else if (parts.size() == 3 && parts[0] == "lognormal") {
    m = lognormal(num(1), num(2));
  } else {
    throw ConfigError("bad latency model '" + text +
                      "' (expected fixed:MS, uniform:LO:HI or lognormal:MEAN:SIGMA)");
  }
  m.validate();
  return m;
}

std::string LatencyModel::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::fixed: os << "fixed:" << a; break;
    case Kind::uniform: os << "uniform:" << a << ':' << b; break;
    case Kind::lognormal: os << "lognormal:" << a << ':' << b; break;
  }
  return os.str();
}

void LatencyModel::validate() const {
  const bool ok = [&] {
    switch (kind) {
      case Kind::fixed: return a > 0.0 && std::isfinite(a);
      case Kind::uniform: return a > 0.0 && b >= a && std::isfinite(b);
      case Kind::lognormal: return a > 0.0 && b >= 0.0 && std::isfinite(a) && std::isfinite(b);
    }
    return false;
  }();
  if (!ok) throw ConfigError("invalid latency model " + to_string());
}

SimTime LatencyModel::sample(Rng& rng) const {
  double v = a;
  switch (kind) {
    case Kind::fixed:
      break;
    case Kind::uniform:
      v = a + (b - a) * uniform_unit(rng);
      break;
    case Kind::lognormal: {
      const double z = standard_normal(rng);
      const double mu = std::log(a) - 0.5 * b * b;
      v = std::exp(mu + b * z);
      break;
    }
  }
  return std::max<SimTime>(1, std::llround(v));
}

void SimConfig::validate() const {
  if (spaces == 0) throw ConfigError("number of ring spaces must be positive");
  if (heartbeat_period <= 0) throw ConfigError("heartbeat period must be positive");
  if (self_repair_period < 0) throw ConfigError("self-repair period must be >= 0");
  if (probe_interval < 0) throw ConfigError("probe interval must be >= 0");
  if (join_timeout < 0) throw ConfigError("join timeout must be >= 0");
  latency.validate();
}

std::uint64_t MessageCounters::total() const {
  std::uint64_t t = 0;
  for (auto c : by_kind) t += c;
  return t;
}

// ---------------------------------------------------------------- simulator

Simulator::Simulator(SimConfig config)
    : config_(std::move(config)),
      latency_rng_(make_rng(config_.seed, "latency")),
      id_rng_(make_rng(config_.seed, "node_ids")),
      churn_rng_(make_rng(config_.seed, "churn")),
      phase_rng_(make_rng(config_.seed, "timer_phase")),
      app_rng_(make_rng(config_.seed, "application")) {
  config_.validate();
}

namespace {
struct Later {
  template <typename E>
  bool operator()(const E& x, const E& y) const {
    return std::tie(x.time, x.seq) > std::tie(y.time, y.seq);
  }
};
}  // namespace

void Simulator::push(SimTime time, Payload payload) {
  heap_.push_back(Event{time, seq_++, std::move(payload)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

bool Simulator::pop(Event& out) {
  if (heap_.empty()) return false;
  std::pop_heap(heap_.begin(), heap_.end(), Later{});
  out = std::move(heap_.back());
  heap_.pop_back();
  return true;
}

void Simulator::trace(NodeId node, const std::string& what) const {
  if (config_.trace) {
    *config_.trace << "t=" << now_ << " node=" << node << " ev=" << what << '\n';
  }
}

NodeId Simulator::fresh_id() {
  for (;;) {
    const NodeId id = id_rng_();
    if (id != 0 && used_ids_.insert(id).second) return id;
  }
}

void Simulator::require_empty() const {
  if (!nodes_.empty()) throw ParameterError("simulator already has a population");
}

void Simulator::install_correct(const std::vector<NodeId>& ids) {
  require_empty();
  std::map<NodeId, CoordVector> coords;
  for (NodeId id : ids) {
    if (!coords.emplace(id, derive_coords(id, config_.spaces)).second) {
      throw ConfigError("duplicate node id " + std::to_string(id));
    }
    used_ids_.insert(id);
  }
  nodes_ = ndmp::install_correct_overlay(coords, config_.heartbeat_period, now_);
  for (NodeId id : ids) activated(id);
}

std::vector<NodeId> Simulator::install_correct(std::size_t n) {
  std::vector<NodeId> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(fresh_id());
  install_correct(ids);
  return ids;
}

void Simulator::install_static(const topo::OverlayGraph& g) {
  require_empty();
  std::map<NodeId, std::set<NodeId>> adj;
  for (NodeId id : g.ids()) {
    used_ids_.insert(id);
    auto [it, _] = nodes_.try_emplace(id, id, derive_coords(id, config_.spaces),
                                      config_.heartbeat_period);
    it->second.status = Status::active;
    const auto nb = g.neighbors_of(id);
    adj[id] = std::set<NodeId>(nb.begin(), nb.end());
  }
  static_neighbors_ = std::move(adj);
  for (NodeId id : g.ids()) activated(id);
}

BuildResult Simulator::bootstrap_sequential(std::size_t n) {
  require_empty();
  if (n < 2) throw ParameterError("sequential build needs at least 2 nodes");
  if (maintenance_) throw ParameterError("build before starting maintenance");
  BuildResult result;
  result.ids = {fresh_id(), fresh_id()};
  install_correct(result.ids);
  const SimTime saved_timeout = config_.join_timeout;
  config_.join_timeout = 0;
  for (std::size_t i = 2; i < n; ++i) {
    const NodeId id = fresh_id();
    apply_churn(Churn{ChurnAction::join, id, std::nullopt});
    drain();
    if (!is_active(id)) {
      throw ProtocolError("sequential join of node " + std::to_string(id) +
                          " did not complete");
    }
    result.ids.push_back(id);
  }
  config_.join_timeout = saved_timeout;
  result.mean_messages_per_client =
      static_cast<double>(counters_.total()) / static_cast<double>(n);
  if (counters_.discovery_paths > 0) {
    result.mean_discovery_hops = static_cast<double>(counters_.discovery_hops) /
                                 static_cast<double>(counters_.discovery_paths);
  }
  return result;
}

void Simulator::start_maintenance() {
  if (maintenance_) return;
  maintenance_ = true;
  for (auto& [id, node] : nodes_) {
    for (NodeId nb : node.neighbor_ids()) node.find(nb)->last_heartbeat = now_;
  }
  if (!static_neighbors_) {
    for (const auto& [id, node] : nodes_) {
      if (node.status == Status::active || node.status == Status::joining) {
        start_timers(id);
      }
    }
  }
  if (config_.probe_interval > 0) push(now_, Probe{});
}

void Simulator::start_timers(NodeId id) {
  const auto t = static_cast<std::uint64_t>(config_.heartbeat_period);
  push(now_ + 1 + static_cast<SimTime>(uniform_below(phase_rng_, t)),
       Timer{id, TimerKind::heartbeat, 0});
  if (config_.self_repair_period > 0 && is_active(id)) {
    const auto r = static_cast<std::uint64_t>(config_.self_repair_period);
    push(now_ + 1 + static_cast<SimTime>(uniform_below(phase_rng_, r)),
         Timer{id, TimerKind::self_repair, 0});
  }
}

void Simulator::activated(NodeId id) {
  trace(id, "active");
  // A node that joined while maintenance runs checks its adjacency right
  // away; its heartbeat timer has been running since the join began.
  if (maintenance_ && !static_neighbors_ && config_.self_repair_period > 0) {
    push(now_, Timer{id, TimerKind::self_repair, 0});
  }
  if (app_) app_->on_active(*this, id);
}

void Simulator::send(NodeId from, ndmp::ProtocolMessage msg) {
  ++counters_.by_kind[static_cast<std::size_t>(msg.kind)];
  ++counters_.sent_by_node[from];
  const SimTime at = now_ + config_.latency.sample(latency_rng_);
  push(at, Deliver{from, std::move(msg)});
}

void Simulator::send_all(NodeId from, std::vector<ndmp::ProtocolMessage>& msgs) {
  for (auto& m : msgs) send(from, std::move(m));
  msgs.clear();
}

void Simulator::send_app(NodeId from, NodeId to, mep::MepMessage msg) {
  ++counters_.app_messages;
  counters_.app_bytes += mep::wire_size(msg);
  msg.sender = from;
  const SimTime at = now_ + config_.latency.sample(latency_rng_);
  push(at, DeliverApp{to, std::move(msg)});
}

void Simulator::schedule_app_timer(NodeId node, SimTime delay, std::uint64_t tag) {
  if (delay < 0) throw ParameterError("negative timer delay");
  push(now_ + delay, Timer{node, TimerKind::app, tag});
}

NodeId Simulator::random_active(std::optional<NodeId> exclude) {
  std::vector<NodeId> pool;
  for (const auto& [id, node] : nodes_) {
    if (node.status == Status::active && id != exclude) pool.push_back(id);
  }
  if (pool.empty()) throw ProtocolError("no active node to bootstrap through");
  return pool[uniform_below(churn_rng_, pool.size())];
}

void Simulator::start_join(NodeId id, std::optional<NodeId> bootstrap) {
  auto& node = nodes_.at(id);
  const bool anyone = std::any_of(nodes_.begin(), nodes_.end(), [&](const auto& kv) {
    return kv.first != id && kv.second.status == Status::active;
  });
  if (!anyone) {
    // First node of an empty network.
    node.status = Status::active;
    for (std::size_t s = 0; s < node.spaces(); ++s) node.mark_discovered(s);
    activated(id);
    return;
  }
  if (!bootstrap || !is_active(*bootstrap) || *bootstrap == id) {
    bootstrap = random_active(id);
  }
  auto out = ndmp::initiate_join(node, *bootstrap);
  trace(id, "join bootstrap=" + std::to_string(*bootstrap));
  send_all(id, out);
  if (config_.join_timeout > 0) {
    push(now_ + config_.join_timeout, Timer{id, TimerKind::join_timeout, 0});
  }
}

void Simulator::apply_churn(const Churn& c) {
  switch (c.action) {
    case ChurnAction::join: {
      used_ids_.insert(c.id);
      pending_joins_.erase(c.id);
      auto [it, inserted] = nodes_.try_emplace(
          c.id, c.id, derive_coords(c.id, config_.spaces), config_.heartbeat_period);
      if (!inserted) throw ProtocolError("duplicate join of node " + std::to_string(c.id));
      if (maintenance_ && !static_neighbors_) start_timers(c.id);
      start_join(c.id, c.bootstrap);
      break;
    }
    case ChurnAction::fail: {
      auto it = nodes_.find(c.id);
      if (it == nodes_.end()) return;
      it->second.status = Status::failed;
      trace(c.id, "fail");
      if (app_) app_->on_gone(*this, c.id);
      break;
    }
    case ChurnAction::leave: {
      auto it = nodes_.find(c.id);
      if (it == nodes_.end()) return;
      auto& node = it->second;
      trace(c.id, "leave");
      if (node.status == Status::active) {
        auto out = ndmp::initiate_leave(node);
        send_all(c.id, out);
      } else {
        node.status = Status::left;
        node.clear();
      }
      if (app_) app_->on_gone(*this, c.id);
      break;
    }
  }
}

NodeId Simulator::join_now(std::optional<NodeId> id, std::optional<NodeId> bootstrap) {
  NodeId nid = id ? *id : fresh_id();
  if (id && (nodes_.count(*id) || pending_joins_.count(*id))) {
    throw ConfigError("node id " + std::to_string(*id) + " already in use");
  }
  apply_churn(Churn{ChurnAction::join, nid, bootstrap});
  return nid;
}

void Simulator::fail_now(NodeId id) {
  if (!is_active(id)) throw ConfigError("cannot fail unknown node " + std::to_string(id));
  apply_churn(Churn{ChurnAction::fail, id, std::nullopt});
}

void Simulator::leave_now(NodeId id) {
  if (!is_active(id)) throw ConfigError("cannot remove unknown node " + std::to_string(id));
  apply_churn(Churn{ChurnAction::leave, id, std::nullopt});
}

void Simulator::schedule_churn(const ChurnScript& script) {
  std::set<NodeId> projected;
  for (NodeId id : live_ids()) projected.insert(id);
  // Ids handed out by fresh_id() stay joinable until a node actually uses them.
  std::set<NodeId> reserved;
  for (const auto& [id, n] : nodes_) reserved.insert(id);
  reserved.insert(pending_joins_.begin(), pending_joins_.end());

  ChurnScript sorted = script;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ChurnEntry& a, const ChurnEntry& b) { return a.time < b.time; });

  std::vector<std::pair<SimTime, Churn>> events;
  for (const auto& e : sorted) {
    if (e.time < now_) {
      throw ConfigError("churn event at t=" + std::to_string(e.time) +
                        " is before the current time " + std::to_string(now_));
    }
    if (e.action == ChurnAction::join) {
      if (e.id) {
        if (!reserved.insert(*e.id).second) {
          throw ConfigError("join of id " + std::to_string(*e.id) + " which is not fresh");
        }
        if (e.bootstrap && !projected.count(*e.bootstrap)) {
          throw ConfigError("bootstrap " + std::to_string(*e.bootstrap) +
                            " is not live at t=" + std::to_string(e.time));
        }
        projected.insert(*e.id);
        events.push_back({e.time, Churn{ChurnAction::join, *e.id, e.bootstrap}});
      } else {
        for (std::size_t i = 0; i < e.count; ++i) {
          const NodeId id = fresh_id();
          reserved.insert(id);
          projected.insert(id);
          events.push_back({e.time, Churn{ChurnAction::join, id, std::nullopt}});
        }
      }
      continue;
    }
    std::vector<NodeId> victims;
    if (e.id) {
      if (!projected.count(*e.id)) {
        throw ConfigError(std::string(to_string(e.action)) + " of unknown id " +
                          std::to_string(*e.id) + " at t=" + std::to_string(e.time));
      }
      victims.push_back(*e.id);
    } else {
      if (e.count > projected.size()) {
        throw ConfigError("churn script removes " + std::to_string(e.count) +
                          " nodes at t=" + std::to_string(e.time) + " but only " +
                          std::to_string(projected.size()) + " are live");
      }
      std::vector<NodeId> pool(projected.begin(), projected.end());
      for (std::size_t i = 0; i < e.count; ++i) {
        std::swap(pool[i], pool[i + uniform_below(churn_rng_, pool.size() - i)]);
        victims.push_back(pool[i]);
      }
    }
    for (NodeId v : victims) {
      projected.erase(v);
      events.push_back({e.time, Churn{e.action, v, std::nullopt}});
    }
  }
  for (auto& [t, c] : events) {
    if (c.action == ChurnAction::join) {
      used_ids_.insert(c.id);
      pending_joins_.insert(c.id);
    }
    push(t, std::move(c));
  }
}

void Simulator::dispatch(Event& ev) {
  now_ = ev.time;
  std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Deliver>) {
          on_deliver(p);
        } else if constexpr (std::is_same_v<P, Bounce>) {
          on_bounce(p);
        } else if constexpr (std::is_same_v<P, DeliverApp>) {
          if (!is_active(p.to)) {
            ++counters_.dropped_dead_receiver;
            return;
          }
          if (app_) app_->on_message(*this, p.to, p.msg);
        } else if constexpr (std::is_same_v<P, Timer>) {
          on_timer(p);
        } else if constexpr (std::is_same_v<P, Churn>) {
          apply_churn(p);
        } else {
          probes_.push_back(probe());
          push(now_ + config_.probe_interval, Probe{});
        }
      },
      ev.payload);
}

void Simulator::on_deliver(Deliver& d) {
  const NodeId to = d.msg.to;
  auto it = nodes_.find(to);
  if (it == nodes_.end() || it->second.status == Status::failed ||
      it->second.status == Status::left) {
    ++counters_.dropped_dead_receiver;
    if (config_.connection_resets && is_live(d.from)) {
      push(now_ + config_.latency.sample(latency_rng_), Bounce{d.from, to, std::move(d.msg)});
    }
    return;
  }
  ++counters_.delivered;
  if (config_.trace) trace(to, "recv " + ndmp::describe(d.msg));
  auto r = ndmp::handle_message(it->second, d.msg, now_);
  if (r.dropped_hop_limit) {
    ++counters_.dropped_hop_limit;
    trace(to, "drop-hop-limit");
  }
  if (r.decision && d.msg.kind == ndmp::MessageKind::neighbor_discovery &&
      r.decision->action == ndmp::RouteAction::terminate) {
    ++counters_.discovery_paths;
    counters_.discovery_hops += d.msg.hop_count;
  }
  send_all(to, r.out);
  if (r.became_active) activated(to);
}

void Simulator::on_bounce(Bounce& b) {
  auto it = nodes_.find(b.sender);
  if (it == nodes_.end() || !is_live(b.sender)) return;
  ++counters_.resets;
  if (config_.trace) trace(b.sender, "reset peer=" + std::to_string(b.dead));
  auto r = ndmp::handle_unreachable(it->second, b.dead, b.msg, now_);
  counters_.failures_detected += r.detected_failures.size();
  if (r.dropped_hop_limit) ++counters_.dropped_hop_limit;
  send_all(b.sender, r.out);
}

void Simulator::on_timer(const Timer& t) {
  auto it = nodes_.find(t.node);
  if (it == nodes_.end()) return;
  auto& node = it->second;
  if (node.status == Status::failed || node.status == Status::left) return;
  switch (t.kind) {
    case TimerKind::heartbeat: {
      auto r = ndmp::heartbeat_tick(node, now_);
      counters_.failures_detected += r.detected_failures.size();
      for (NodeId f : r.detected_failures) trace(t.node, "detect-failure peer=" + std::to_string(f));
      send_all(t.node, r.out);
      push(now_ + config_.heartbeat_period, t);
      break;
    }
    case TimerKind::self_repair: {
      auto out = ndmp::periodic_self_repair(node, now_);
      send_all(t.node, out);
      push(now_ + config_.self_repair_period, t);
      break;
    }
    case TimerKind::app:
      if (app_ && node.status == Status::active) app_->on_timer(*this, t.node, t.tag);
      break;
    case TimerKind::join_timeout:
      if (node.status == Status::joining) {
        ++counters_.join_retries;
        trace(t.node, "join-retry");
        start_join(t.node, std::nullopt);
      }
      break;
  }
}

void Simulator::run_until(SimTime until) {
  Event ev;
  while (!heap_.empty() && heap_.front().time <= until) {
    pop(ev);
    dispatch(ev);
  }
  now_ = std::max(now_, until);
}

void Simulator::drain(std::uint64_t max_events) {
  if (maintenance_) throw ProtocolError("cannot drain while periodic timers are running");
  Event ev;
  std::uint64_t processed = 0;
  while (pop(ev)) {
    if (++processed > max_events) throw ProtocolError("event budget exhausted while draining");
    dispatch(ev);
  }
}

bool Simulator::is_live(NodeId id) const {
  auto it = nodes_.find(id);
  return it != nodes_.end() && (it->second.status == Status::active ||
                                it->second.status == Status::joining);
}

std::vector<NodeId> Simulator::live_ids() const {
  std::vector<NodeId> out;
  for (const auto& [id, node] : nodes_) {
    if (node.status == Status::active || node.status == Status::joining) out.push_back(id);
  }
  return out;
}

std::vector<NodeId> Simulator::active_ids() const {
  std::vector<NodeId> out;
  for (const auto& [id, node] : nodes_) {
    if (node.status == Status::active) out.push_back(id);
  }
  return out;
}

std::size_t Simulator::live_count() const { return live_ids().size(); }

const ndmp::NodeState& Simulator::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw ParameterError("unknown node " + std::to_string(id));
  return it->second;
}

bool Simulator::is_active(NodeId id) const {
  auto it = nodes_.find(id);
  return it != nodes_.end() && it->second.status == Status::active;
}

std::set<NodeId> Simulator::neighbors(NodeId id) const {
  if (static_neighbors_) {
    auto it = static_neighbors_->find(id);
    return it == static_neighbors_->end() ? std::set<NodeId>{} : it->second;
  }
  return node(id).neighbor_ids();
}

std::map<NodeId, CoordVector> Simulator::live_coords() const {
  std::map<NodeId, CoordVector> out;
  for (const auto& [id, node] : nodes_) {
    if (node.status == Status::active || node.status == Status::joining) {
      out.emplace(id, node.coords());
    }
  }
  return out;
}

double Simulator::correctness() const {
  if (static_neighbors_) return 1.0;
  const auto coords = live_coords();
  if (coords.size() < 2) return 1.0;
  std::map<NodeId, std::set<NodeId>> stored;
  for (const auto& [id, c] : coords) stored.emplace(id, nodes_.at(id).neighbor_ids());
  return topo::topology_correctness(stored, coords);
}

ProbeSample Simulator::probe() const {
  ProbeSample s;
  s.t = now_;
  s.correctness = correctness();
  s.msgs_total = counters_.total();
  const std::size_t live = live_count();
  s.msgs_per_client = live ? static_cast<double>(s.msgs_total) / static_cast<double>(live) : 0.0;
  return s;
}

std::optional<SimTime> recovery_time(const std::vector<ProbeSample>& series,
                                     SimTime from) {
  std::optional<SimTime> found;
  for (const auto& s : series) {
    if (s.t < from) continue;
    if (s.correctness == 1.0) {
      if (!found) found = s.t;
    } else {
      found.reset();
    }
  }
  return found;
}

double min_correctness(const std::vector<ProbeSample>& series, SimTime from,
                       SimTime to) {
  double m = 1.0;
  for (const auto& s : series) {
    if (s.t >= from && s.t <= to) m = std::min(m, s.correctness);
  }
  return m;
}

void write_probe_csv(std::ostream& out, const std::vector<ProbeSample>& series) {
  out << "t_ms,correctness,msgs_total,msgs_per_client\n";
  for (const auto& s : series) {
    out << s.t << ',' << s.correctness << ',' << s.msgs_total << ',' << s.msgs_per_client << '\n';
  }
}

ChurnRunResult run_churn(const ChurnRun& run) {
  SimConfig cfg = run.sim;
  if (cfg.probe_interval == 0) cfg.probe_interval = 100;
  if (run.script.empty()) throw ConfigError("churn run needs at least one event");
  if (run.duration <= 0) throw ConfigError("duration must be positive");
  Simulator s(cfg);
  s.install_correct(run.initial_nodes);
  s.start_maintenance();
  s.schedule_churn(run.script);
  s.run_until(run.duration);
  ChurnRunResult r;
  r.series = s.probes();
  r.first_event = std::min_element(run.script.begin(), run.script.end(),
                                   [](const ChurnEntry& a, const ChurnEntry& b) {
                                     return a.time < b.time;
                                   })->time;
  r.min_correctness = min_correctness(r.series, r.first_event, run.duration);
  r.recovered_at = recovery_time(r.series, r.first_event);
  r.counters = s.counters();
  return r;
}

}  // namespace fedlay::sim
