#pragma once

// Deterministic discrete-event simulation of a population of NDMP nodes.
// Events are ordered by (time, sequence number); all randomness comes from
// streams derived from SimConfig::seed.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "fedlay/churn.hpp"
#include "fedlay/graph.hpp"
#include "fedlay/mep.hpp"
#include "fedlay/ndmp.hpp"
#include "fedlay/rng.hpp"

namespace fedlay::sim {

struct LatencyModel {
  enum class Kind { fixed, uniform, lognormal };

  Kind kind = Kind::lognormal;
  double a = 350.0;  // fixed: delay; uniform: low; lognormal: mean
  double b = 0.3;    // uniform: high; lognormal: sigma of the underlying normal

  static LatencyModel fixed(double ms) { return {Kind::fixed, ms, 0.0}; }
  static LatencyModel uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static LatencyModel lognormal(double mean, double sigma) {
    return {Kind::lognormal, mean, sigma};
  }

  // "fixed:<ms>", "uniform:<lo>:<hi>" or "lognormal:<mean>:<sigma>".
  static LatencyModel parse(const std::string& text);
  std::string to_string() const;

  void validate() const;

  // Whole milliseconds, at least 1.
  SimTime sample(Rng& rng) const;
};

struct SimConfig {
  std::size_t spaces = 5;
  SimTime heartbeat_period = 1000;
  SimTime self_repair_period = 2000;  // 0 disables periodic self-repair
  LatencyModel latency;
  std::uint64_t seed = 1;
  SimTime probe_interval = 0;  // 0 disables probes
  // A join still incomplete after this long is restarted through a fresh
  // bootstrap. 0 disables retries.
  SimTime join_timeout = 10000;
  // Senders learn, one latency later, that a message could not be delivered
  // and treat the receiver as failed.
  bool connection_resets = true;
  std::ostream* trace = nullptr;

  void validate() const;
};

struct ProbeSample {
  SimTime t = 0;
  double correctness = 1.0;
  std::uint64_t msgs_total = 0;
  double msgs_per_client = 0.0;
};

struct MessageCounters {
  std::array<std::uint64_t, ndmp::kMessageKinds> by_kind{};
  std::map<NodeId, std::uint64_t> sent_by_node;
  std::uint64_t delivered = 0;
  std::uint64_t dropped_dead_receiver = 0;
  std::uint64_t resets = 0;
  std::uint64_t dropped_hop_limit = 0;
  std::uint64_t failures_detected = 0;
  std::uint64_t join_retries = 0;
  std::uint64_t discovery_paths = 0;
  std::uint64_t discovery_hops = 0;
  std::uint64_t app_messages = 0;
  std::uint64_t app_bytes = 0;

  std::uint64_t total() const;
};

class Simulator;

// Hook for a layer running on top of the overlay (model exchange).
class Application {
 public:
  virtual ~Application() = default;
  virtual void on_active(Simulator&, NodeId) {}
  virtual void on_gone(Simulator&, NodeId) {}
  virtual void on_timer(Simulator&, NodeId, std::uint64_t /*tag*/) {}
  virtual void on_message(Simulator&, NodeId /*at*/, const mep::MepMessage&) {}
};

struct BuildResult {
  std::vector<NodeId> ids;  // join order
  double mean_messages_per_client = 0.0;
  double mean_discovery_hops = 0.0;
};

class Simulator {
 public:
  explicit Simulator(SimConfig config);

  const SimConfig& config() const { return config_; }
  SimTime now() const { return now_; }

  // Population setup. Each requires an empty simulator.
  void install_correct(const std::vector<NodeId>& ids);
  std::vector<NodeId> install_correct(std::size_t n);
  // Fixed neighbor sets, no maintenance protocol (baseline topologies).
  void install_static(const topo::OverlayGraph& g);
  // Grows a network from two nodes by serialized joins through random live
  // bootstraps with maintenance off. Per-client message cost covers the
  // construction only.
  BuildResult bootstrap_sequential(std::size_t n);

  // Starts heartbeats and self-repair on every active node (random phases);
  // nodes activated later start their own. Starts probes if configured.
  void start_maintenance();
  bool maintenance_running() const { return maintenance_; }

  // Resolves anonymous entries against the projected membership and
  // schedules every event. Throws ConfigError for unknown or duplicate ids
  // and for times in the past.
  void schedule_churn(const ChurnScript& script);

  // Processes every event with time <= until, then sets the clock to until.
  void run_until(SimTime until);
  // Processes events until the queue is empty. Throws ProtocolError if
  // periodic timers are running or max_events is exceeded.
  void drain(std::uint64_t max_events = 100'000'000);

  // Churn applied immediately, outside any script.
  NodeId join_now(std::optional<NodeId> id = std::nullopt,
                  std::optional<NodeId> bootstrap = std::nullopt);
  void fail_now(NodeId id);
  void leave_now(NodeId id);

  // Nodes that are joining or active.
  std::vector<NodeId> live_ids() const;
  std::vector<NodeId> active_ids() const;
  std::size_t live_count() const;
  const std::map<NodeId, ndmp::NodeState>& nodes() const { return nodes_; }
  const ndmp::NodeState& node(NodeId id) const;
  bool is_active(NodeId id) const;
  bool is_live(NodeId id) const;

  // The overlay neighbors seen by the application layer.
  std::set<NodeId> neighbors(NodeId id) const;

  std::map<NodeId, CoordVector> live_coords() const;
  double correctness() const;
  ProbeSample probe() const;
  const std::vector<ProbeSample>& probes() const { return probes_; }
  const MessageCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = MessageCounters{}; }

  // Application interface.
  void set_application(Application* app) { app_ = app; }
  void send_app(NodeId from, NodeId to, mep::MepMessage msg);
  void schedule_app_timer(NodeId node, SimTime delay, std::uint64_t tag);
  Rng& app_rng() { return app_rng_; }

  NodeId fresh_id();

 private:
  struct Deliver {
    NodeId from;
    ndmp::ProtocolMessage msg;
  };
  // Connection reset seen by the sender of an undeliverable message.
  struct Bounce {
    NodeId sender;
    NodeId dead;
    ndmp::ProtocolMessage msg;
  };
  struct DeliverApp {
    NodeId to;
    mep::MepMessage msg;
  };
  enum class TimerKind { heartbeat, self_repair, app, join_timeout };
  struct Timer {
    NodeId node;
    TimerKind kind;
    std::uint64_t tag;
  };
  struct Churn {
    ChurnAction action;
    NodeId id;
    std::optional<NodeId> bootstrap;
  };
  struct Probe {};
  using Payload = std::variant<Deliver, Bounce, DeliverApp, Timer, Churn, Probe>;
  struct Event {
    SimTime time;
    std::uint64_t seq;
    Payload payload;
  };

  void push(SimTime time, Payload payload);
  bool pop(Event& out);
  void dispatch(Event& ev);
  void send(NodeId from, ndmp::ProtocolMessage msg);
  void send_all(NodeId from, std::vector<ndmp::ProtocolMessage>& msgs);
  void on_deliver(Deliver& d);
  void on_bounce(Bounce& b);
  void on_timer(const Timer& t);
  void apply_churn(const Churn& c);
  void activated(NodeId id);
  void start_timers(NodeId id);
  void start_join(NodeId id, std::optional<NodeId> bootstrap);
  NodeId random_active(std::optional<NodeId> exclude);
  void require_empty() const;
  void trace(NodeId node, const std::string& what) const;

  SimConfig config_;
  SimTime now_ = 0;
  std::uint64_t seq_ = 0;
  std::vector<Event> heap_;
  std::map<NodeId, ndmp::NodeState> nodes_;
  std::optional<std::map<NodeId, std::set<NodeId>>> static_neighbors_;
  std::set<NodeId> used_ids_;
  std::set<NodeId> pending_joins_;
  bool maintenance_ = false;
  std::vector<ProbeSample> probes_;
  MessageCounters counters_;
  Application* app_ = nullptr;
  Rng latency_rng_;
  Rng id_rng_;
  Rng churn_rng_;
  Rng phase_rng_;
  Rng app_rng_;
};

// First probe time t >= from with correctness == 1.0 that is followed by no
// lower sample, or nullopt.
std::optional<SimTime> recovery_time(const std::vector<ProbeSample>& series,
                                     SimTime from);

// Lowest correctness among probes with t in [from, to].
double min_correctness(const std::vector<ProbeSample>& series, SimTime from,
                       SimTime to);

void write_probe_csv(std::ostream& out, const std::vector<ProbeSample>& series);

struct ChurnRun {
  SimConfig sim;  // probe_interval defaults to 100 ms here when 0
  std::size_t initial_nodes = 400;
  ChurnScript script;
  SimTime duration = 30000;
};

struct ChurnRunResult {
  std::vector<ProbeSample> series;
  SimTime first_event = 0;
  // Lowest correctness from the first churn event on.
  double min_correctness = 1.0;
  // Absolute time at which correctness returned to 1.0 for good.
  std::optional<SimTime> recovered_at;
  MessageCounters counters;
};

// Correct overlay of initial_nodes active nodes, maintenance running from
// t = 0, the script applied, simulated until duration.
ChurnRunResult run_churn(const ChurnRun& run);

}  // namespace fedlay::sim
