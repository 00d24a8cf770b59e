#pragma once

// Decentralized learning on top of a simulated overlay: every client trains
// a softmax model on its own shards and periodically aggregates the latest
// models of its overlay neighbors, pulled through the model exchange
// protocol.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "fedlay/dataset.hpp"
#include "fedlay/graph.hpp"
#include "fedlay/mep.hpp"
#include "fedlay/simnet.hpp"
#include "fedlay/softmax.hpp"

namespace fedlay::dfl {

enum class TopologyKind { fedlay, ring, complete, chord, random_regular };

TopologyKind parse_topology_kind(std::string_view name);
std::string_view to_string(TopologyKind kind);

struct DflConfig {
  TopologyKind topology = TopologyKind::fedlay;
  std::size_t spaces = 5;   // fedlay
  std::size_t degree = 10;  // random_regular
  std::size_t clients = 100;
  // Extra clients joining through the overlay protocol at join_time (fedlay
  // only). Their shards are dealt together with everyone else's.
  std::size_t late_joiners = 0;
  SimTime join_time = 0;

  bool iid = false;
  std::size_t shards_per_client = 2;
  // 0: the smallest multiple of the class count covering every client.
  std::size_t total_shards = 0;
  SyntheticConfig data;

  double learning_rate = 0.5;
  std::size_t local_steps = 5;  // gradient steps per local period
  SimTime base_period = 10000;  // medium-capacity period, ms
  bool heterogeneous = true;    // 60/20/20 medium/high/low tiers
  bool use_confidence = true;   // false: every model weighs the same
  mep::ConfidenceWeights alpha;
  bool dedup = true;

  SimTime duration = 600000;
  SimTime sample_interval = 10000;
  sim::LatencyModel latency;
  SimTime heartbeat_period = 1000;
  SimTime self_repair_period = 2000;
  std::uint64_t seed = 1;

  std::size_t population() const { return clients + late_joiners; }
  std::size_t resolved_total_shards() const;
  void validate() const;
};

// Data, partition and per-client training sets derived from a config.
struct Federation {
  SyntheticDataset data;
  ShardAssignment shards;
  SoftmaxShape shape;
  std::vector<Samples> client_data;
  std::vector<mep::LabelHistogram> histograms;
};

Federation make_federation(const DflConfig& config);

struct ClientSample {
  SimTime t = 0;  // since training started
  std::size_t client = 0;
  double accuracy = 0.0;
  mep::Tier tier = mep::Tier::medium;
  std::uint64_t bytes_sent = 0;
  double c_d = 0.0;
  double c_c = 0.0;
  std::uint64_t sends_suppressed = 0;
};

struct MeanSample {
  SimTime t = 0;
  double accuracy = 0.0;
  std::size_t clients = 0;
};

struct DflResult {
  std::vector<ClientSample> samples;
  std::vector<MeanSample> mean;
  double final_mean_accuracy = 0.0;
  // Final mean over the initial clients and over late joiners (NaN if none).
  double final_incumbent_accuracy = 0.0;
  double final_joiner_accuracy = 0.0;
  std::optional<SimTime> convergence_time;
  std::uint64_t total_bytes = 0;
  std::uint64_t messages = 0;
  std::uint64_t sends_suppressed = 0;
};

DflResult run_dfl(const DflConfig& config);
DflResult run_dfl(const DflConfig& config, const Federation& fed);

// Central server: each round every client trains local_steps from the global
// model and the server takes the uniform mean. One round per base period;
// the returned series holds the global model's accuracy after each round.
std::vector<MeanSample> fedavg_baseline(const DflConfig& config, const Federation& fed);

// One synchronous aggregation step on a static graph: each vertex replaces
// its model by the confidence-weighted mean over itself and its neighbors.
// models and confidences are indexed like g's vertices.
std::vector<std::vector<double>> synchronous_mep_round(
    const topo::OverlayGraph& g, const std::vector<std::vector<double>>& models,
    const std::vector<double>& confidences);

// First time the trailing `window`-point moving average of the series is
// within `tolerance` (relative) of its final value.
std::optional<SimTime> convergence_time(const std::vector<MeanSample>& series,
                                        std::size_t window = 5,
                                        double tolerance = 0.01);

// t_ms,client_id,accuracy,tier,bytes_sent,c_d,c_c,sends_suppressed
void write_accuracy_csv(std::ostream& out, const std::vector<ClientSample>& samples);

// t_ms,mean_accuracy,clients
void write_mean_csv(std::ostream& out, const std::vector<MeanSample>& series);

}  // namespace fedlay::dfl
