#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "fedlay/baselines.hpp"
#include "fedlay/churn.hpp"
#include "fedlay/graph.hpp"
#include "fedlay/spectral.hpp"

namespace fedlay::cli {

namespace {

using nlohmann::json;

std::ofstream open_out(const Common& common, const std::string& name) {
  std::filesystem::create_directories(common.out);
  const auto path = common.out / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f.precision(17);
  return f;
}

void write_json(const Common& common, const std::string& name, const json& j) {
  auto f = open_out(common, name);
  f << j.dump(2) << '\n';
}

template <typename T>
void require_nonempty(const std::vector<T>& v, const char* what) {
  if (v.empty()) throw ConfigError(std::string("empty sweep: ") + what);
}

double mean_degree(const topo::OverlayGraph& g) {
  return g.size() == 0 ? 0.0
                       : 2.0 * static_cast<double>(g.edge_count()) /
                             static_cast<double>(g.size());
}

void metrics_row(std::ostream& out, std::string_view kind, const topo::OverlayGraph& g,
                 std::uint64_t seed) {
  const auto m = topo::compute_metrics(g);
  out << kind << ',' << g.size() << ',' << mean_degree(g) << ',' << m.lambda << ','
      << m.convergence_factor << ',' << m.diameter << ',' << m.avg_shortest_path << ','
      << seed << '\n';
}

json counters_json(const sim::MessageCounters& c) {
  json by_kind = json::object();
  for (std::size_t k = 0; k < ndmp::kMessageKinds; ++k) {
    by_kind[std::string(ndmp::to_string(static_cast<ndmp::MessageKind>(k)))] = c.by_kind[k];
  }
  return {{"total", c.total()},
          {"by_kind", by_kind},
          {"delivered", c.delivered},
          {"dropped_dead_receiver", c.dropped_dead_receiver},
          {"connection_resets", c.resets},
          {"dropped_hop_limit", c.dropped_hop_limit},
          {"failures_detected", c.failures_detected},
          {"join_retries", c.join_retries}};
}

}  // namespace

void run_topo_metrics(const Common& common, const TopoOptions& opt) {
  require_nonempty(opt.kinds, "kinds");
  require_nonempty(opt.n, "n");
  if (opt.repeats == 0) throw ConfigError("repeats must be >= 1");
  std::vector<std::string_view> kinds;
  for (const auto& k : opt.kinds) {
    if (k != "fedlay") topo::parse_baseline_kind(k);
    kinds.push_back(k);
  }
  auto out = open_out(common, "topo_metrics.csv");
  out << "kind,n,degree,lambda,c_G,diameter,aspl,seed\n";
  for (std::size_t n : opt.n) {
    for (std::string_view kind : kinds) {
      if (kind == "fedlay") {
        require_nonempty(opt.spaces, "spaces");
        for (std::size_t l : opt.spaces) {
          for (std::size_t r = 0; r < opt.repeats; ++r) {
            const std::uint64_t seed = common.seed + r;
            metrics_row(out, kind, topo::fedlay_overlay(n, l, seed), seed);
          }
        }
        continue;
      }
      const auto bk = topo::parse_baseline_kind(kind);
      if (bk == topo::BaselineKind::random_regular) {
        require_nonempty(opt.degrees, "degrees");
        for (std::size_t d : opt.degrees) {
          for (std::size_t r = 0; r < opt.repeats; ++r) {
            topo::BaselineParams p;
            p.degree = d;
            p.seed = common.seed + r;
            metrics_row(out, kind, topo::generate_baseline(bk, n, p), p.seed);
          }
        }
        continue;
      }
      metrics_row(out, kind, topo::generate_baseline(bk, n), common.seed);
    }
  }
}

void run_best_of_k(const Common& common, const BestOfKOptions& opt) {
  require_nonempty(opt.n, "n");
  require_nonempty(opt.degrees, "degrees");
  if (opt.k == 0) throw ConfigError("k must be >= 1");
  auto out = open_out(common, "best_of_k.csv");
  out << "n,degree,k,lambda,c_G,diameter,aspl,seed\n";
  for (std::size_t n : opt.n) {
    for (std::size_t d : opt.degrees) {
      const auto m = topo::best_of_k(n, d, opt.k, common.seed);
      out << n << ',' << d << ',' << opt.k << ',' << m.lambda << ',' << m.convergence_factor
          << ',' << m.diameter << ',' << m.avg_shortest_path << ',' << common.seed << '\n';
    }
  }
}

void run_build(const Common& common, const BuildOptions& opt) {
  require_nonempty(opt.n, "n");
  if (opt.repeats == 0) throw ConfigError("repeats must be >= 1");
  const auto latency = sim::LatencyModel::parse(opt.latency);
  auto out = open_out(common, "build.csv");
  out << "n,L,seed,mean_messages_per_client,mean_discovery_hops,correctness\n";
  json runs = json::array();
  for (std::size_t n : opt.n) {
    for (std::size_t r = 0; r < opt.repeats; ++r) {
      sim::SimConfig cfg;
      cfg.spaces = opt.spaces;
      cfg.latency = latency;
      cfg.seed = common.seed + r;
      cfg.validate();
      sim::Simulator s(cfg);
      const auto res = s.bootstrap_sequential(n);
      const double corr = s.correctness();
      out << n << ',' << opt.spaces << ',' << cfg.seed << ',' << res.mean_messages_per_client
          << ',' << res.mean_discovery_hops << ',' << corr << '\n';
      runs.push_back({{"n", n},
                      {"seed", cfg.seed},
                      {"mean_messages_per_client", res.mean_messages_per_client},
                      {"mean_discovery_hops", res.mean_discovery_hops},
                      {"correctness", corr},
                      {"messages", counters_json(s.counters())}});
    }
  }
  write_json(common, "build_summary.json", {{"L", opt.spaces}, {"runs", runs}});
}

void run_churn(const Common& common, const ChurnOptions& opt) {
  sim::ChurnRun run;
  run.sim.spaces = opt.spaces;
  run.sim.heartbeat_period = opt.heartbeat;
  run.sim.self_repair_period = opt.repair_period;
  run.sim.latency = sim::LatencyModel::parse(opt.latency);
  run.sim.seed = common.seed;
  run.sim.probe_interval = opt.probe;
  run.sim.connection_resets = opt.resets;
  run.sim.validate();
  run.initial_nodes = opt.n;
  run.duration = opt.duration;
  if (!opt.script.empty()) {
    run.script = sim::read_churn_file(opt.script);
  } else {
    auto add = [&](sim::ChurnAction a, std::size_t count) {
      if (count == 0) return;
      sim::ChurnEntry e;
      e.time = opt.at;
      e.action = a;
      e.count = count;
      run.script.push_back(e);
    };
    add(sim::ChurnAction::join, opt.joins);
    add(sim::ChurnAction::fail, opt.failures);
    add(sim::ChurnAction::leave, opt.leaves);
  }
  {
    auto f = open_out(common, "churn_script.txt");
    sim::write_churn_script(f, run.script);
  }
  const auto res = sim::run_churn(run);
  {
    auto f = open_out(common, "churn.csv");
    sim::write_probe_csv(f, res.series);
  }
  json summary = {{"initial_nodes", opt.n},
                  {"L", opt.spaces},
                  {"seed", common.seed},
                  {"first_event_ms", res.first_event},
                  {"min_correctness", res.min_correctness},
                  {"messages", counters_json(res.counters)}};
  if (res.recovered_at) {
    summary["recovered_at_ms"] = *res.recovered_at;
    summary["convergence_time_ms"] = *res.recovered_at - res.first_event;
  } else {
    summary["recovered_at_ms"] = nullptr;
    summary["convergence_time_ms"] = nullptr;
  }
  write_json(common, "churn_summary.json", summary);
  std::cout << "min correctness " << res.min_correctness << ", converged to 1.0 ";
  if (res.recovered_at) {
    std::cout << *res.recovered_at - res.first_event << " ms after the first event\n";
  } else {
    std::cout << "never\n";
  }
}

void run_dfl(const Common& common, const DflOptions& opt) {
  require_nonempty(opt.topologies, "topologies");
  dfl::DflConfig base = opt.config;
  base.seed = common.seed;
  base.latency = sim::LatencyModel::parse(opt.latency);
  std::vector<dfl::TopologyKind> kinds;
  for (const auto& t : opt.topologies) kinds.push_back(dfl::parse_topology_kind(t));
  for (auto k : kinds) {
    dfl::DflConfig c = base;
    c.topology = k;
    c.validate();
  }
  const dfl::Federation fed = dfl::make_federation(base);
  json summary = json::array();
  auto record = [&](std::string_view name, const std::vector<dfl::MeanSample>& mean,
                    double final_acc, std::uint64_t bytes, json extra) {
    auto f = open_out(common, "dfl_" + std::string(name) + "_mean.csv");
    dfl::write_mean_csv(f, mean);
    const auto conv = dfl::convergence_time(mean);
    json row = {{"topology", name},
                {"final_mean_acc", final_acc},
                {"convergence_time_ms", conv ? json(*conv) : json(nullptr)},
                {"total_bytes", bytes}};
    row.update(extra);
    summary.push_back(row);
  };
  for (auto k : kinds) {
    dfl::DflConfig c = base;
    c.topology = k;
    const auto res = dfl::run_dfl(c, fed);
    const std::string name(dfl::to_string(k));
    auto f = open_out(common, "dfl_" + name + "_clients.csv");
    dfl::write_accuracy_csv(f, res.samples);
    json extra = {{"messages", res.messages}, {"sends_suppressed", res.sends_suppressed}};
    if (c.late_joiners > 0) {
      extra["final_incumbent_acc"] = res.final_incumbent_accuracy;
      extra["final_joiner_acc"] = res.final_joiner_accuracy;
    }
    record(name, res.mean, res.final_mean_accuracy, res.total_bytes, extra);
    std::cout << name << ": final mean accuracy " << res.final_mean_accuracy << '\n';
  }
  if (opt.fedavg) {
    const auto series = dfl::fedavg_baseline(base, fed);
    record("fedavg", series, series.empty() ? 0.0 : series.back().accuracy, 0, json::object());
    if (!series.empty()) {
      std::cout << "fedavg: final accuracy " << series.back().accuracy << '\n';
    }
  }
  write_json(common, "dfl_summary.json", summary);
}

}  // namespace fedlay::cli
