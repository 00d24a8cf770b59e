#include "fedlay/dfl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <string>

#include "fedlay/baselines.hpp"
#include "fedlay/churn.hpp"

namespace fedlay::dfl {

namespace {

constexpr std::uint64_t kTickTag = 1;

struct PeerView {
  std::vector<double> params;
  bool have_model = false;
  mep::Fingerprint fingerprint = 0;
  double c_d = 1.0;
  SimTime period = 0;
  SimTime next_exchange = 0;
};

struct Client {
  std::size_t index = 0;
  mep::Tier tier = mep::Tier::medium;
  SimTime period = 0;
  double c_d = 1.0;
  std::vector<double> model;
  std::uint64_t version = 0;
  mep::Fingerprint fingerprint = 0;
  std::map<NodeId, PeerView> peers;
  std::uint64_t bytes_sent = 0;
  std::uint64_t sends_suppressed = 0;
  bool started = false;
};

double c_c_of(SimTime period) {
  return mep::communication_confidence(static_cast<double>(period) / 1000.0);
}

// Runs the model exchange protocol for every client on the simulator.
class Learner : public sim::Application {
 public:
  Learner(const DflConfig& config, const Federation& fed) : config_(config), fed_(fed) {}

  void add_client(NodeId id, std::size_t index, mep::Tier tier) {
    Client c;
    c.index = index;
    c.tier = tier;
    const double mult = config_.heterogeneous ? mep::tier_multiplier(tier) : 1.0;
    c.period = std::max<SimTime>(
        1, std::llround(static_cast<double>(config_.base_period) * mult));
    c.c_d = mep::data_divergence_confidence(fed_.histograms.at(index));
    c.model = zero_model(fed_.shape);
    c.fingerprint = mep::fingerprint(c.model);
    clients_.emplace(id, std::move(c));
  }

  void start(sim::Simulator& s, NodeId id) {
    auto it = clients_.find(id);
    if (it == clients_.end() || it->second.started) return;
    it->second.started = true;
    const auto phase = static_cast<SimTime>(
        uniform_below(s.app_rng(), static_cast<std::uint64_t>(it->second.period)));
    s.schedule_app_timer(id, 1 + phase, kTickTag);
  }

  void on_active(sim::Simulator& s, NodeId id) override {
    if (accepting_) start(s, id);
  }

  void on_timer(sim::Simulator& s, NodeId id, std::uint64_t tag) override {
    if (tag != kTickTag) return;
    auto it = clients_.find(id);
    if (it == clients_.end()) return;
    tick(s, id, it->second);
    s.schedule_app_timer(id, it->second.period, kTickTag);
  }

  void on_message(sim::Simulator& s, NodeId at, const mep::MepMessage& msg) override {
    auto it = clients_.find(at);
    if (it == clients_.end()) return;
    Client& c = it->second;
    PeerView& p = c.peers[msg.sender];
    p.c_d = msg.c_d;
    p.period = static_cast<SimTime>(msg.period_ms);
    switch (msg.kind) {
      case mep::MessageKind::fingerprint_probe: {
        mep::MepMessage reply;
        reply.sender = at;
        reply.version = c.version;
        reply.c_d = c.c_d;
        reply.period_ms = static_cast<std::uint32_t>(c.period);
        reply.fingerprint = c.fingerprint;
        if (config_.dedup && msg.fingerprint == c.fingerprint) {
          reply.kind = mep::MessageKind::probe_reply;
          ++c.sends_suppressed;
        } else {
          reply.kind = mep::MessageKind::model_push;
          reply.params.assign(c.model.begin(), c.model.end());
        }
        c.bytes_sent += mep::wire_size(reply);
        s.send_app(at, msg.sender, std::move(reply));
        break;
      }
      case mep::MessageKind::model_push:
        p.params.assign(msg.params.begin(), msg.params.end());
        p.have_model = true;
        p.fingerprint = msg.fingerprint;
        break;
      case mep::MessageKind::probe_reply:
        break;
    }
  }

  void set_accepting(bool on) { accepting_ = on; }
  std::map<NodeId, Client>& clients() { return clients_; }

 private:
  void tick(sim::Simulator& s, NodeId id, Client& c) {
    local_train(c.model, fed_.shape, fed_.client_data.at(c.index), config_.learning_rate,
                config_.local_steps);

    const std::set<NodeId> nbrs = s.neighbors(id);
    std::erase_if(c.peers, [&](const auto& kv) { return nbrs.count(kv.first) == 0; });

    std::vector<const PeerView*> inputs;
    std::vector<mep::ConfidenceInputs> meta;
    for (const auto& [nid, p] : c.peers) {
      if (!p.have_model) continue;
      inputs.push_back(&p);
      meta.push_back({p.c_d, c_c_of(p.period)});
    }
    if (!inputs.empty()) {
      const mep::ConfidenceInputs own{c.c_d, c_c_of(c.period)};
      std::vector<mep::ConfidenceInputs> hood = meta;
      hood.push_back(own);
      auto conf = [&](const mep::ConfidenceInputs& x) {
        return config_.use_confidence ? mep::overall_confidence(x, hood, config_.alpha) : 1.0;
      };
      std::vector<mep::WeightedModel> wm;
      wm.reserve(inputs.size());
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        wm.push_back({inputs[i]->params, conf(meta[i])});
      }
      mep::ModelVector mine{c.model, c.version};
      c.model = mep::aggregate(mine, conf(own), wm).params;
    }
    ++c.version;
    c.fingerprint = mep::fingerprint(c.model);

    const SimTime now = s.now();
    for (NodeId v : nbrs) {
      auto [pit, fresh] = c.peers.try_emplace(v);
      PeerView& p = pit->second;
      if (fresh) {
        p.period = c.period;
        p.next_exchange = now;
      }
      if (now < p.next_exchange) continue;
      p.next_exchange = now + mep::exchange_period(c.period, p.period);
      mep::MepMessage probe;
      probe.kind = mep::MessageKind::fingerprint_probe;
      probe.sender = id;
      probe.version = c.version;
      probe.c_d = c.c_d;
      probe.period_ms = static_cast<std::uint32_t>(c.period);
      probe.fingerprint = p.have_model ? p.fingerprint : 0;
      c.bytes_sent += mep::wire_size(probe);
      s.send_app(id, v, std::move(probe));
    }
  }

  const DflConfig& config_;
  const Federation& fed_;
  std::map<NodeId, Client> clients_;
  bool accepting_ = false;
};

topo::BaselineKind baseline_of(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::ring: return topo::BaselineKind::ring;
    case TopologyKind::complete: return topo::BaselineKind::complete;
    case TopologyKind::chord: return topo::BaselineKind::chord;
    case TopologyKind::random_regular: return topo::BaselineKind::random_regular;
    case TopologyKind::fedlay: break;
  }
  throw ParameterError("fedlay is not a static baseline");
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

TopologyKind parse_topology_kind(std::string_view name) {
  if (name == "fedlay") return TopologyKind::fedlay;
  if (name == "ring") return TopologyKind::ring;
  if (name == "complete") return TopologyKind::complete;
  if (name == "chord") return TopologyKind::chord;
  if (name == "random_regular" || name == "rrg") return TopologyKind::random_regular;
  throw ConfigError("unknown topology '" + std::string(name) + "'");
}

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::fedlay: return "fedlay";
    case TopologyKind::ring: return "ring";
    case TopologyKind::complete: return "complete";
    case TopologyKind::chord: return "chord";
    case TopologyKind::random_regular: return "random_regular";
  }
  return "unknown";
}

std::size_t DflConfig::resolved_total_shards() const {
  if (total_shards != 0) return total_shards;
  const std::size_t need = population() * shards_per_client;
  const std::size_t k = data.num_classes;
  return (need + k - 1) / k * k;
}

void DflConfig::validate() const {
  data.validate();
  if (clients < 2) throw ConfigError("dfl needs at least 2 clients");
  if (late_joiners > 0 && topology != TopologyKind::fedlay) {
    throw ConfigError("late joiners need the fedlay topology");
  }
  if (join_time < 0) throw ConfigError("join_time must be >= 0");
  if (spaces == 0) throw ConfigError("spaces must be >= 1");
  if (topology == TopologyKind::random_regular && (degree == 0 || degree >= clients)) {
    throw ConfigError("random_regular degree must be in [1, clients)");
  }
  if (!iid && shards_per_client == 0) throw ConfigError("shards_per_client must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (local_steps == 0) throw ConfigError("local_steps must be >= 1");
  if (base_period <= 0) throw ConfigError("base_period must be positive");
  if (duration <= 0) throw ConfigError("duration must be positive");
  if (sample_interval <= 0) throw ConfigError("sample_interval must be positive");
  if (alpha.alpha_d < 0.0 || alpha.alpha_c < 0.0 || alpha.alpha_d + alpha.alpha_c <= 0.0) {
    throw ConfigError("confidence weights must be nonnegative and not both zero");
  }
  latency.validate();
}

Federation make_federation(const DflConfig& config) {
  config.validate();
  Federation fed;
  fed.data = make_synthetic(config.data, derive_seed(config.seed, "dfl-data"));
  const std::uint64_t shard_seed = derive_seed(config.seed, "dfl-shards");
  fed.shards = config.iid
                   ? make_iid(fed.data, config.population(), shard_seed)
                   : make_noniid(fed.data, config.population(), config.shards_per_client,
                                 config.resolved_total_shards(), shard_seed);
  fed.shape = {config.data.dims, config.data.num_classes};
  for (std::size_t c = 0; c < config.population(); ++c) {
    fed.client_data.push_back(subset(fed.data.train, fed.shards.client_samples(c)));
    fed.histograms.push_back(
        fed.shards.histogram(c, fed.data.train, fed.data.num_classes));
  }
  return fed;
}

DflResult run_dfl(const DflConfig& config) { return run_dfl(config, make_federation(config)); }

DflResult run_dfl(const DflConfig& config, const Federation& fed) {
  config.validate();
  if (fed.client_data.size() != config.population()) {
    throw ParameterError("federation does not match the configured population");
  }
  sim::SimConfig sc;
  sc.spaces = config.spaces;
  sc.heartbeat_period = config.heartbeat_period;
  sc.self_repair_period = config.self_repair_period;
  sc.latency = config.latency;
  sc.seed = config.seed;
  sc.validate();
  sim::Simulator s(sc);

  Rng tier_rng = make_rng(config.seed, "tiers");
  const std::vector<mep::Tier> tiers = mep::assign_tiers(config.population(), tier_rng);

  Learner learner(config, fed);
  std::vector<NodeId> ids;
  if (config.topology == TopologyKind::fedlay) {
    ids = s.bootstrap_sequential(config.clients).ids;
    s.reset_counters();
    s.start_maintenance();
  } else {
    topo::BaselineParams bp;
    bp.degree = config.degree;
    bp.seed = derive_seed(config.seed, "dfl-topology");
    const topo::OverlayGraph g = topo::generate_baseline(baseline_of(config.topology),
                                                         config.clients, bp);
    s.install_static(g);
    ids = g.ids();
  }
  const SimTime t0 = s.now();
  std::map<NodeId, std::size_t> index_of;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    learner.add_client(ids[i], i, tiers[i]);
    index_of[ids[i]] = i;
  }
  s.set_application(&learner);
  learner.set_accepting(true);
  for (NodeId id : ids) learner.start(s, id);

  if (config.late_joiners > 0) {
    sim::ChurnScript script;
    for (std::size_t j = 0; j < config.late_joiners; ++j) {
      const NodeId id = s.fresh_id();
      const std::size_t index = config.clients + j;
      learner.add_client(id, index, tiers[index]);
      index_of[id] = index;
      sim::ChurnEntry e;
      e.time = t0 + config.join_time;
      e.action = sim::ChurnAction::join;
      e.id = id;
      script.push_back(e);
    }
    s.schedule_churn(script);
  }

  DflResult result;
  std::vector<double> last_incumbent;
  std::vector<double> last_joiner;
  for (SimTime t = config.sample_interval; t <= config.duration; t += config.sample_interval) {
    s.run_until(t0 + t);
    std::vector<double> accs;
    last_incumbent.clear();
    last_joiner.clear();
    for (auto& [id, c] : learner.clients()) {
      if (!c.started || !s.is_active(id)) continue;
      ClientSample cs;
      cs.t = t;
      cs.client = c.index;
      cs.accuracy = evaluate(c.model, fed.shape, fed.data.test);
      cs.tier = c.tier;
      cs.bytes_sent = c.bytes_sent;
      cs.c_d = c.c_d;
      cs.c_c = c_c_of(c.period);
      cs.sends_suppressed = c.sends_suppressed;
      accs.push_back(cs.accuracy);
      (c.index < config.clients ? last_incumbent : last_joiner).push_back(cs.accuracy);
      result.samples.push_back(cs);
    }
    result.mean.push_back({t, mean_of(accs), accs.size()});
  }
  std::sort(result.samples.begin(), result.samples.end(),
            [](const ClientSample& a, const ClientSample& b) {
              return a.t != b.t ? a.t < b.t : a.client < b.client;
            });
  if (!result.mean.empty()) result.final_mean_accuracy = result.mean.back().accuracy;
  result.final_incumbent_accuracy = mean_of(last_incumbent);
  result.final_joiner_accuracy = mean_of(last_joiner);
  result.convergence_time = convergence_time(result.mean);
  result.total_bytes = s.counters().app_bytes;
  result.messages = s.counters().app_messages;
  for (const auto& [id, c] : learner.clients()) result.sends_suppressed += c.sends_suppressed;
  return result;
}

std::vector<MeanSample> fedavg_baseline(const DflConfig& config, const Federation& fed) {
  config.validate();
  const std::size_t n = fed.client_data.size();
  if (n == 0) throw ParameterError("no clients");
  std::vector<double> global = zero_model(fed.shape);
  std::vector<MeanSample> out;
  const SimTime rounds = config.duration / config.base_period;
  for (SimTime r = 1; r <= rounds; ++r) {
    std::vector<double> sum(global.size(), 0.0);
    for (const Samples& data : fed.client_data) {
      std::vector<double> local = global;
      local_train(local, fed.shape, data, config.learning_rate, config.local_steps);
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += local[i];
    }
    for (std::size_t i = 0; i < sum.size(); ++i) global[i] = sum[i] / static_cast<double>(n);
    out.push_back({r * config.base_period, evaluate(global, fed.shape, fed.data.test), n});
  }
  return out;
}

std::vector<std::vector<double>> synchronous_mep_round(
    const topo::OverlayGraph& g, const std::vector<std::vector<double>>& models,
    const std::vector<double>& confidences) {
  if (models.size() != g.size() || confidences.size() != g.size()) {
    throw ParameterError("one model and one confidence per vertex required");
  }
  std::vector<std::vector<double>> out(g.size());
  for (std::size_t u = 0; u < g.size(); ++u) {
    std::vector<mep::WeightedModel> in{{models[u], confidences[u]}};
    for (std::size_t v : g.adjacent(u)) in.push_back({models[v], confidences[v]});
    out[u] = mep::aggregate(in);
  }
  return out;
}

std::optional<SimTime> convergence_time(const std::vector<MeanSample>& series,
                                        std::size_t window, double tolerance) {
  if (window == 0) throw ParameterError("window must be >= 1");
  if (series.size() < window) return std::nullopt;
  std::vector<double> ma;
  for (std::size_t i = window - 1; i < series.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = i + 1 - window; j <= i; ++j) sum += series[j].accuracy;
    ma.push_back(sum / static_cast<double>(window));
  }
  const double final_value = ma.back();
  for (std::size_t k = 0; k < ma.size(); ++k) {
    if (std::abs(ma[k] - final_value) <= tolerance * std::abs(final_value)) {
      return series[k + window - 1].t;
    }
  }
  return std::nullopt;
}

void write_accuracy_csv(std::ostream& out, const std::vector<ClientSample>& samples) {
  out << "t_ms,client_id,accuracy,tier,bytes_sent,c_d,c_c,sends_suppressed\n";
  const auto old = out.precision(17);
  for (const auto& s : samples) {
    out << s.t << ',' << s.client << ',' << s.accuracy << ',' << mep::to_string(s.tier) << ','
        << s.bytes_sent << ',' << s.c_d << ',' << s.c_c << ',' << s.sends_suppressed << '\n';
  }
  out.precision(old);
}

void write_mean_csv(std::ostream& out, const std::vector<MeanSample>& series) {
  out << "t_ms,mean_accuracy,clients\n";
  const auto old = out.precision(17);
  for (const auto& s : series) out << s.t << ',' << s.accuracy << ',' << s.clients << '\n';
  out.precision(old);
}

}  // namespace fedlay::dfl
