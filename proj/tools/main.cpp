// fedlay: experiment runner for overlay topology, churn and decentralized
// learning simulations.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime protocol error.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Records every resolved option beside the outputs; passing the file back
// through --config reproduces the run.
void write_resolved(const CLI::App& app, const fedlay::cli::Common& common,
                    const std::string& name) {
  std::filesystem::create_directories(common.out);
  std::ofstream f(common.out / (name + ".resolved.ini"));
  if (!f) throw fedlay::ConfigError("cannot write resolved config to " + common.out.string());
  f << app.config_to_str(true, false);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fedlay::cli;

  CLI::App app{"FedLay overlay and decentralized learning experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML file with option values; flags win");

  Common common;
  app.add_option("--seed", common.seed, "Root seed")->capture_default_str();
  app.add_option("--out", common.out, "Output directory")->capture_default_str();

  TopoOptions topo;
  auto* topo_cmd = app.add_subcommand("topo-metrics", "lambda, c_G, diameter and ASPL sweeps");
  topo_cmd->add_option("--kinds", topo.kinds, "fedlay ring complete chord random_regular grid2d torus hypercube")
      ->delimiter(',')->capture_default_str();
  topo_cmd->add_option("--n", topo.n, "Network sizes")->delimiter(',')->capture_default_str();
  topo_cmd->add_option("--L", topo.spaces, "FedLay ring space counts")->delimiter(',')->capture_default_str();
  topo_cmd->add_option("--degree", topo.degrees, "Random regular degrees")->delimiter(',')->capture_default_str();
  topo_cmd->add_option("--repeats", topo.repeats, "Seeds per randomized topology")->capture_default_str();

  BestOfKOptions best;
  auto* best_cmd = app.add_subcommand("best-of-k", "Best metrics over k random regular graphs");
  best_cmd->add_option("--n", best.n, "Network sizes")->delimiter(',')->capture_default_str();
  best_cmd->add_option("--degree", best.degrees, "Degrees")->delimiter(',')->capture_default_str();
  best_cmd->add_option("--k", best.k, "Samples per point")->capture_default_str();

  BuildOptions build;
  auto* build_cmd = app.add_subcommand("build", "Sequential join build and message cost");
  build_cmd->add_option("--n", build.n, "Network sizes")->delimiter(',')->capture_default_str();
  build_cmd->add_option("--L", build.spaces, "Ring spaces")->capture_default_str();
  build_cmd->add_option("--latency", build.latency, "fixed:MS | uniform:LO:HI | lognormal:MEAN:SIGMA")
      ->capture_default_str();
  build_cmd->add_option("--repeats", build.repeats, "Seeds per size")->capture_default_str();

  ChurnOptions churn;
  auto* churn_cmd = app.add_subcommand("churn", "Topology correctness under churn");
  churn_cmd->add_option("--n", churn.n, "Initial network size")->capture_default_str();
  churn_cmd->add_option("--L", churn.spaces, "Ring spaces")->capture_default_str();
  churn_cmd->add_option("--T", churn.heartbeat, "Heartbeat period (ms)")->capture_default_str();
  churn_cmd->add_option("--R", churn.repair_period, "Self-repair period (ms), 0 = off")->capture_default_str();
  churn_cmd->add_option("--latency", churn.latency, "Latency model")->capture_default_str();
  churn_cmd->add_option("--script", churn.script, "Churn script file (overrides counts)");
  churn_cmd->add_option("--at", churn.at, "Time of the churn burst (ms)")->capture_default_str();
  churn_cmd->add_option("--joins", churn.joins, "Simultaneous joins")->capture_default_str();
  churn_cmd->add_option("--failures", churn.failures, "Simultaneous failures")->capture_default_str();
  churn_cmd->add_option("--leaves", churn.leaves, "Simultaneous leaves")->capture_default_str();
  churn_cmd->add_option("--duration", churn.duration, "Simulated time (ms)")->capture_default_str();
  churn_cmd->add_option("--probe", churn.probe, "Correctness probe interval (ms)")->capture_default_str();
  churn_cmd->add_option("--resets", churn.resets, "Senders learn of dead receivers")->capture_default_str();

  DflOptions dflo;
  auto& dc = dflo.config;
  auto* dfl_cmd = app.add_subcommand("dfl", "Decentralized learning accuracy per topology");
  dfl_cmd->add_option("--topology", dflo.topologies, "fedlay ring complete chord random_regular")
      ->delimiter(',')->capture_default_str();
  dfl_cmd->add_option("--fedavg", dflo.fedavg, "Also run the central FedAvg baseline")->capture_default_str();
  dfl_cmd->add_option("--clients", dc.clients, "Initial clients")->capture_default_str();
  dfl_cmd->add_option("--L", dc.spaces, "FedLay ring spaces")->capture_default_str();
  dfl_cmd->add_option("--degree", dc.degree, "Random regular degree")->capture_default_str();
  dfl_cmd->add_option("--joiners", dc.late_joiners, "Clients joining later (fedlay)")->capture_default_str();
  dfl_cmd->add_option("--join-time", dc.join_time, "Join time after training starts (ms)")->capture_default_str();
  dfl_cmd->add_option("--iid", dc.iid, "Uniform random partition instead of label shards")->capture_default_str();
  dfl_cmd->add_option("--shards", dc.shards_per_client, "Shards per client")->capture_default_str();
  dfl_cmd->add_option("--total-shards", dc.total_shards, "Shard pool size, 0 = just enough")->capture_default_str();
  dfl_cmd->add_option("--classes", dc.data.num_classes, "Classes")->capture_default_str();
  dfl_cmd->add_option("--dims", dc.data.dims, "Feature dimensions")->capture_default_str();
  dfl_cmd->add_option("--train", dc.data.train_size, "Training samples")->capture_default_str();
  dfl_cmd->add_option("--test", dc.data.test_size, "Test samples")->capture_default_str();
  dfl_cmd->add_option("--separation", dc.data.separation, "Closest class-mean distance (sigma)")->capture_default_str();
  dfl_cmd->add_option("--lr", dc.learning_rate, "Learning rate")->capture_default_str();
  dfl_cmd->add_option("--steps", dc.local_steps, "Gradient steps per local period")->capture_default_str();
  dfl_cmd->add_option("--period", dc.base_period, "Medium-capacity period (ms)")->capture_default_str();
  dfl_cmd->add_option("--tiers", dc.heterogeneous, "60/20/20 capacity tiers")->capture_default_str();
  dfl_cmd->add_option("--confidence", dc.use_confidence, "Confidence-weighted aggregation")->capture_default_str();
  dfl_cmd->add_option("--alpha-d", dc.alpha.alpha_d, "Data confidence weight")->capture_default_str();
  dfl_cmd->add_option("--alpha-c", dc.alpha.alpha_c, "Communication confidence weight")->capture_default_str();
  dfl_cmd->add_option("--dedup", dc.dedup, "Fingerprint deduplication")->capture_default_str();
  dfl_cmd->add_option("--duration", dc.duration, "Simulated time (ms)")->capture_default_str();
  dfl_cmd->add_option("--sample", dc.sample_interval, "Accuracy sample interval (ms)")->capture_default_str();
  dfl_cmd->add_option("--latency", dflo.latency, "Latency model")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*topo_cmd) {
      write_resolved(app, common, "topo-metrics");
      run_topo_metrics(common, topo);
    } else if (*best_cmd) {
      write_resolved(app, common, "best-of-k");
      run_best_of_k(common, best);
    } else if (*build_cmd) {
      write_resolved(app, common, "build");
      run_build(common, build);
    } else if (*churn_cmd) {
      write_resolved(app, common, "churn");
      run_churn(common, churn);
    } else if (*dfl_cmd) {
      write_resolved(app, common, "dfl");
      run_dfl(common, dflo);
    }
  } catch (const fedlay::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fedlay::ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
