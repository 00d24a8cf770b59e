// Acceptance suite. Runs every criterion (or those named on the command
// line), prints one PASS/FAIL line per criterion and exits nonzero if any
// failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fedlay/baselines.hpp"
#include "fedlay/dfl.hpp"
#include "fedlay/graph.hpp"
#include "fedlay/mep.hpp"
#include "fedlay/simnet.hpp"
#include "fedlay/spectral.hpp"
#include "ring_walk.hpp"

using namespace fedlay;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// CSV outputs of the scenario runs, reused by the determinism check.
std::optional<std::string> closure_csv_first;
std::optional<std::string> churn_csv_first;
std::optional<std::string> dfl_csv_first;

// ---------------------------------------------------------------- 1 and 2

struct RoutingTally {
  std::uint64_t discovery_routes = 0;
  std::uint64_t discovery_mismatches = 0;
  std::uint64_t discovery_violations = 0;
  std::uint64_t repair_routes = 0;
  std::uint64_t repair_mismatches = 0;
  std::uint64_t repair_violations = 0;
  double discovery_seconds = 0;
};

std::optional<RoutingTally> routing_tally;

const RoutingTally& routing_sweep() {
  if (routing_tally) return *routing_tally;
  RoutingTally t;
  for (std::size_t n = 4; n <= 64; ++n) {
    for (std::size_t l = 1; l <= 4; ++l) {
      for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto t0 = Clock::now();
        auto states = ndmp::install_correct_overlay(testkit::random_population(n, l, seed), 1000);
        Rng rng = make_rng(seed, "acceptance-targets", n * 8 + l);
        for (int k = 0; k < 50; ++k) {
          const std::size_t space = static_cast<std::size_t>(k) % l;
          const Coord target(uniform_unit(rng));
          const NodeId oracle = testkit::brute_force_closest(states, space, target);
          const auto msg = testkit::discovery_message(space, target, l);
          for (const auto& [start, s] : states) {
            const auto w = testkit::walk(states, start, msg);
            ++t.discovery_routes;
            t.discovery_mismatches += w.terminal != oracle;
            t.discovery_violations += w.violations;
          }
        }
        t.discovery_seconds += seconds_since(t0);
        std::vector<NodeId> ids;
        for (const auto& [id, s] : states) ids.push_back(id);
        for (NodeId dead : ids) {
          for (const auto& c : testkit::repair_after_failure(states, dead)) {
            ++t.repair_routes;
            t.repair_mismatches += c.walk.terminal != c.expected;
            t.repair_violations += c.walk.violations;
          }
        }
      }
    }
  }
  routing_tally = t;
  return *routing_tally;
}

Outcome criterion1() {
  const auto& t = routing_sweep();
  const double secs = t.discovery_seconds;
  const bool pass = t.discovery_mismatches == 0 && secs < 120.0;
  return {pass, fmt("%llu discovery routes (n=4..64, L=1..4, 20 seeds, 50 targets, every start), "
                    "%llu ended away from the brute-force closest node; %.1f s (limit 120 s)",
                    static_cast<unsigned long long>(t.discovery_routes),
                    static_cast<unsigned long long>(t.discovery_mismatches), secs)};
}

Outcome criterion2() {
  const auto& t = routing_sweep();
  const bool pass = t.discovery_violations == 0 && t.repair_violations == 0 && t.repair_mismatches == 0;
  return {pass, fmt("per-hop metric increases: discovery %llu, repair %llu over %llu repair routes "
                    "(%llu repairs ended away from the prior adjacent)",
                    static_cast<unsigned long long>(t.discovery_violations),
                    static_cast<unsigned long long>(t.repair_violations),
                    static_cast<unsigned long long>(t.repair_routes),
                    static_cast<unsigned long long>(t.repair_mismatches))};
}

// ---------------------------------------------------------------------- 3

struct ClosureRun {
  std::size_t events = 0;
  std::size_t unrecovered = 0;
  SimTime worst_ms = 0;
  std::string csv;
};

// Sequential build, then 50 single leaves and 50 single failures in random
// order. Every removal is followed by one fresh join so that the population
// stays at n; correctness must return to exactly 1.0 after each event.
ClosureRun closure_run(std::size_t n, std::uint64_t seed) {
  sim::SimConfig cfg;
  cfg.spaces = 5;
  cfg.seed = seed;
  // Event-driven maintenance only: closure has to come from leave notices and
  // failure-triggered repair, not from the periodic sweep.
  cfg.self_repair_period = 0;
  cfg.latency = sim::LatencyModel::uniform(5, 15);
  sim::Simulator s(cfg);
  s.bootstrap_sequential(n);
  s.start_maintenance();
  Rng rng = make_rng(seed, "closure-events", n);
  std::vector<sim::ChurnAction> plan(50, sim::ChurnAction::leave);
  plan.insert(plan.end(), 50, sim::ChurnAction::fail);
  for (std::size_t i = plan.size(); i > 1; --i) std::swap(plan[i - 1], plan[uniform_below(rng, i)]);

  ClosureRun out;
  std::ostringstream csv;
  csv << "event,action,node,t_ms,recovery_ms,correctness\n";
  const SimTime step = 20, limit = 30000;
  auto settle = [&](sim::ChurnAction a, NodeId id) {
    const SimTime start = s.now();
    SimTime waited = 0;
    while (s.correctness() != 1.0 && waited < limit) {
      s.run_until(s.now() + step);
      waited += step;
    }
    const double c = s.correctness();
    out.unrecovered += c != 1.0;
    out.worst_ms = std::max(out.worst_ms, waited);
    csv << out.events++ << ',' << sim::to_string(a) << ',' << id << ',' << start << ',' << waited << ','
        << c << '\n';
    // quiet gap so the next event starts from a settled network
    s.run_until(s.now() + 100);
  };
  for (auto a : plan) {
    const auto active = s.active_ids();
    const NodeId victim = active[uniform_below(rng, active.size())];
    if (a == sim::ChurnAction::leave) {
      s.leave_now(victim);
    } else {
      s.fail_now(victim);
    }
    settle(a, victim);
    const NodeId joined = s.join_now();
    settle(sim::ChurnAction::join, joined);
  }
  out.csv = csv.str();
  return out;
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  std::size_t events = 0, unrecovered = 0;
  SimTime worst = 0;
  for (std::size_t n : {50u, 200u, 500u}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto r = closure_run(n, seed);
      events += r.events;
      unrecovered += r.unrecovered;
      worst = std::max(worst, r.worst_ms);
      if (n == 200 && seed == 1) closure_csv_first = r.csv;
    }
  }
  const double secs = seconds_since(t0);
  return {unrecovered == 0 && secs < 300.0,
          fmt("n in {50,200,500} x 10 seeds, L=5, latency uniform:5:15, no periodic self-repair, "
              "50 leaves + 50 failures each (each followed by one join): "
              "%zu events, %zu without return to 1.0, slowest return %lld ms; %.1f s (limit 300 s)",
              events, unrecovered, static_cast<long long>(worst), secs)};
}

// ---------------------------------------------------------------------- 4

sim::ChurnRun churn_scenario(sim::ChurnAction a, std::uint64_t seed) {
  sim::ChurnRun run;
  run.sim.spaces = 5;
  run.sim.heartbeat_period = 1000;
  run.sim.self_repair_period = 2000;
  run.sim.latency = sim::LatencyModel::lognormal(350, 0.3);
  run.sim.seed = seed;
  run.sim.probe_interval = 100;
  run.initial_nodes = 400;
  sim::ChurnEntry e;
  e.time = 10;
  e.action = a;
  e.count = 100;
  run.script = {e};
  run.duration = 30000;
  return run;
}

std::string probe_csv(const sim::ChurnRunResult& r) {
  std::ostringstream out;
  sim::write_probe_csv(out, r.series);
  return out.str();
}

Outcome criterion4() {
  bool pass = true;
  std::string joins = "joins:", fails = "failures:";
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto j = sim::run_churn(churn_scenario(sim::ChurnAction::join, seed));
    if (seed == 1) churn_csv_first = probe_csv(j);
    const bool jok = j.recovered_at && *j.recovered_at - j.first_event <= 10000;
    pass &= jok;
    joins += j.recovered_at ? fmt(" %lld", static_cast<long long>(*j.recovered_at - j.first_event)) : " never";

    const auto f = sim::run_churn(churn_scenario(sim::ChurnAction::fail, seed));
    const bool fok = f.min_correctness >= 0.59 && f.min_correctness <= 0.69 && f.recovered_at &&
                     *f.recovered_at - f.first_event <= 10000;
    pass &= fok;
    fails += fmt(" %.3f/", f.min_correctness) +
             (f.recovered_at ? fmt("%lld", static_cast<long long>(*f.recovered_at - f.first_event)) : "never");
  }
  return {pass, "400 nodes, 100 simultaneous events, seeds 1-5; recovery ms (limit 10000) " + joins +
                    "; dip/recovery ms (dip in [0.59, 0.69]) " + fails};
}

// ---------------------------------------------------------------------- 5

Outcome criterion5() {
  auto mean_cost = [](std::size_t n) {
    sim::SimConfig cfg;
    cfg.spaces = 5;
    cfg.seed = 1;
    sim::Simulator s(cfg);
    return s.bootstrap_sequential(n).mean_messages_per_client;
  };
  const double m125 = mean_cost(125), m500 = mean_cost(500);
  return {m500 <= 60.0 && m500 < 2 * m125,
          fmt("mean NDMP messages per client, L=5: n=125 %.1f, n=500 %.1f (limit 60, and < 2 x %.1f)", m125,
              m500, m125)};
}

// ---------------------------------------------------------------------- 6

Outcome criterion6() {
  double complete = 0;
  for (std::size_t n : {2u, 3u, 10u, 50u, 300u}) {
    complete = std::max(complete, topo::spectral_lambda(topo::mixing_matrix(
                                      topo::generate_baseline(topo::BaselineKind::complete, n))));
  }
  double ring_err = 0;
  for (std::size_t n = 3; n <= 256; ++n) {
    const double expect = std::abs(1.0 / 3 + 2.0 / 3 * std::cos(2 * std::numbers::pi / static_cast<double>(n)));
    const double got =
        topo::spectral_lambda(topo::mixing_matrix(topo::generate_baseline(topo::BaselineKind::ring, n)));
    ring_err = std::max(ring_err, std::abs(got - expect));
  }
  const double cg_err = std::abs(topo::convergence_factor(1.0 / 3) - 2.25);
  return {complete <= 1e-9 && ring_err <= 1e-9 && cg_err <= 1e-12,
          fmt("max lambda(complete) %.2e (<= 1e-9); max |lambda(ring n) - closed form| over n=3..256 %.2e "
              "(<= 1e-9); |c_G(1/3) - 2.25| %.2e (<= 1e-12)",
              complete, ring_err, cg_err)};
}

// ---------------------------------------------------------------------- 7

Outcome criterion7() {
  const auto t0 = Clock::now();
  bool pass = true;
  std::string rows;
  for (std::size_t l = 3; l <= 7; ++l) {
    std::vector<double> lam, diam, aspl;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto m = topo::compute_metrics(topo::fedlay_overlay(300, l, seed));
      lam.push_back(m.lambda);
      diam.push_back(static_cast<double>(m.diameter));
      aspl.push_back(m.avg_shortest_path);
    }
    const auto best = topo::best_of_k(300, 2 * l, 100, 1);
    const double fl = median(lam), fd = median(diam), fa = median(aspl);
    const double lam_rel = std::abs(fl - best.lambda) / best.lambda;
    const double aspl_rel = std::abs(fa - best.avg_shortest_path) / best.avg_shortest_path;
    const bool ok = lam_rel <= 0.05 && fd <= static_cast<double>(best.diameter) + 1 && aspl_rel <= 0.05;
    pass &= ok;
    rows += fmt(" d=%zu: lambda %.4f vs %.4f (%+.1f%%), diam %.1f vs %zu, aspl %.3f vs %.3f (%+.1f%%)%s;", 2 * l,
                fl, best.lambda, 100 * (fl - best.lambda) / best.lambda, fd, best.diameter, fa,
                best.avg_shortest_path, 100 * (fa - best.avg_shortest_path) / best.avg_shortest_path,
                ok ? "" : " <-");
  }
  const double secs = seconds_since(t0);
  pass &= secs < 600.0;
  return {pass, "n=300, FedLay median of 10 seeds vs best of 100 random regular:" + rows +
                    fmt(" %.1f s (limit 600 s)", secs)};
}

// ---------------------------------------------------------------------- 8

Outcome criterion8() {
  std::vector<std::uint64_t> onehot(10, 0);
  onehot[0] = 123;
  const double cd_err = std::abs(mep::data_divergence_confidence({onehot}) - 0.1);

  Rng rng = make_rng(8, "acceptance-mep");
  std::size_t hull = 0, fixed = 0;
  const int cases = 10000;
  for (int i = 0; i < cases; ++i) {
    const std::size_t k = 1 + uniform_below(rng, 10), dim = 1 + uniform_below(rng, 16);
    std::vector<std::vector<double>> models(k, std::vector<double>(dim));
    std::vector<mep::WeightedModel> in, same;
    for (auto& m : models)
      for (auto& x : m) x = 200 * uniform_unit(rng) - 100;
    for (std::size_t j = 0; j < k; ++j) {
      const double c = 1e-3 + uniform_unit(rng);
      in.push_back({models[j], c});
      same.push_back({models[0], c});
    }
    const auto out = mep::aggregate(in);
    const auto fp = mep::aggregate(same);
    for (std::size_t d = 0; d < dim; ++d) {
      double lo = 1e300, hi = -1e300;
      for (const auto& m : models) {
        lo = std::min(lo, m[d]);
        hi = std::max(hi, m[d]);
      }
      hull += out[d] < lo - 1e-12 || out[d] > hi + 1e-12;
      fixed += std::abs(fp[d] - models[0][d]) > 1e-12 * std::max(1.0, std::abs(models[0][d]));
    }
  }

  std::vector<double> model(330);
  for (auto& x : model) x = uniform_unit(rng);
  std::size_t unchanged_sent = 0, changed_suppressed = 0;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) {
    const auto held = mep::fingerprint(model);
    unchanged_sent += mep::should_send(model, held);
    model[uniform_below(rng, model.size())] += 1e-6 * (1 + uniform_unit(rng));
    changed_suppressed += !mep::should_send(model, held);
  }
  return {cd_err <= 1e-12 && hull == 0 && fixed == 0 && unchanged_sent == 0 && changed_suppressed == 0,
          fmt("|c_d(one-hot) - 0.1| %.1e; %d aggregation cases: %zu hull and %zu fixed-point violations; "
              "%d dedup trials: %zu unchanged sends, %zu changed suppressed",
              cd_err, cases, hull, fixed, trials, unchanged_sent, changed_suppressed)};
}

// ---------------------------------------------------------------------- 9

std::string accuracy_csv(const dfl::DflResult& r) {
  std::ostringstream out;
  dfl::write_accuracy_csv(out, r.samples);
  dfl::write_mean_csv(out, r.mean);
  return out.str();
}

dfl::DflConfig dfl_scenario(std::uint64_t seed) {
  dfl::DflConfig c;
  c.clients = 100;
  c.shards_per_client = 2;
  c.spaces = 5;
  c.seed = seed;
  return c;
}

Outcome criterion9() {
  const double tol = 0.02;
  std::size_t good_seeds = 0;
  std::string rows;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto cfg = dfl_scenario(seed);
    const auto fed = dfl::make_federation(cfg);
    const double fedavg = dfl::fedavg_baseline(cfg, fed).back().accuracy;
    cfg.topology = dfl::TopologyKind::complete;
    const double complete = dfl::run_dfl(cfg, fed).final_mean_accuracy;
    cfg.topology = dfl::TopologyKind::fedlay;
    const auto fl_run = dfl::run_dfl(cfg, fed);
    if (seed == 1) dfl_csv_first = accuracy_csv(fl_run);
    const double fedlay = fl_run.final_mean_accuracy;
    cfg.topology = dfl::TopologyKind::ring;
    const double ring = dfl::run_dfl(cfg, fed).final_mean_accuracy;
    const bool ok = fedavg >= complete - tol && complete >= fedlay - tol && fedlay >= ring - tol;
    good_seeds += ok;
    rows += fmt(" s%llu %.3f/%.3f/%.3f/%.3f%s", static_cast<unsigned long long>(seed), fedavg, complete, fedlay,
                ring, ok ? "" : "(x)");
  }

  const std::size_t n = 30;
  const auto g = topo::generate_baseline(topo::BaselineKind::complete, n);
  Rng rng = make_rng(9, "acceptance-sync");
  std::vector<std::vector<double>> models(n, std::vector<double>(330));
  for (auto& m : models)
    for (auto& x : m) x = uniform_unit(rng) - 0.5;
  std::vector<double> mean(330, 0.0);
  for (const auto& m : models)
    for (std::size_t i = 0; i < m.size(); ++i) mean[i] += m[i] / static_cast<double>(n);
  double worst = 0;
  for (const auto& m : dfl::synchronous_mep_round(g, models, std::vector<double>(n, 1.0))) {
    double e = 0;
    for (std::size_t i = 0; i < m.size(); ++i) e += (m[i] - mean[i]) * (m[i] - mean[i]);
    worst = std::max(worst, std::sqrt(e));
  }
  return {good_seeds >= 4 && worst <= 1e-9,
          fmt("FedAvg >= complete >= fedlay(L=5) >= ring within %.2f in %zu/5 seeds (need 4);", tol, good_seeds) +
              rows + fmt("; complete equal-confidence round vs uniform mean: %.1e (<= 1e-9)", worst)};
}

// --------------------------------------------------------------------- 10

Outcome criterion10() {
  if (!closure_csv_first) closure_csv_first = closure_run(200, 1).csv;
  if (!churn_csv_first) churn_csv_first = probe_csv(sim::run_churn(churn_scenario(sim::ChurnAction::join, 1)));
  if (!dfl_csv_first) {
    auto cfg = dfl_scenario(1);
    cfg.topology = dfl::TopologyKind::fedlay;
    dfl_csv_first = accuracy_csv(dfl::run_dfl(cfg));
  }
  const bool closure = closure_run(200, 1).csv == *closure_csv_first;
  const bool churn = probe_csv(sim::run_churn(churn_scenario(sim::ChurnAction::join, 1))) == *churn_csv_first;
  auto cfg = dfl_scenario(1);
  cfg.topology = dfl::TopologyKind::fedlay;
  const bool learn = accuracy_csv(dfl::run_dfl(cfg)) == *dfl_csv_first;
  auto word = [](bool b) { return b ? "identical" : "DIFFERENT"; };
  return {closure && churn && learn,
          fmt("repeat with seed 1: closure event CSV %s (%zu bytes), churn probe CSV %s (%zu bytes), "
              "DFL accuracy CSV %s (%zu bytes)",
              word(closure), closure_csv_first->size(), word(churn), churn_csv_first->size(), word(learn),
              dfl_csv_first->size())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"routing oracle equivalence", criterion1},
      {"per-hop monotonicity", criterion2},
      {"closure under single events", criterion3},
      {"concurrent churn", criterion4},
      {"message cost", criterion5},
      {"spectral oracles", criterion6},
      {"near-optimal topology", criterion7},
      {"model exchange units", criterion8},
      {"learning accuracy ordering", criterion9},
      {"determinism", criterion10},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(number)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << number << " (" << criteria[i].first
              << ", " << fmt("%.1f s", seconds_since(t0)) << "): " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
