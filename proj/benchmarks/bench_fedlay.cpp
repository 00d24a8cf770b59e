#include <benchmark/benchmark.h>

#include "fedlay/baselines.hpp"
#include "fedlay/dfl.hpp"
#include "fedlay/ndmp.hpp"
#include "fedlay/simnet.hpp"
#include "fedlay/softmax.hpp"
#include "fedlay/spectral.hpp"

using namespace fedlay;

static void BM_DeriveCoords(benchmark::State& state) {
  NodeId id = 1;
  for (auto _ : state) benchmark::DoNotOptimize(derive_coords(id++, 5));
}
BENCHMARK(BM_DeriveCoords);

static void BM_DiscoveryRoute(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::map<NodeId, CoordVector> coords;
  for (NodeId id = 1; id <= n; ++id) coords[id] = derive_coords(id, 5);
  const auto nodes = ndmp::install_correct_overlay(coords, 1000);
  Rng rng = make_rng(1, "bench-route");
  std::size_t hops = 0, routes = 0;
  for (auto _ : state) {
    ndmp::ProtocolMessage m;
    m.kind = ndmp::MessageKind::neighbor_discovery;
    m.space = static_cast<std::uint16_t>(uniform_below(rng, 5));
    m.target = Coord(uniform_unit(rng));
    m.origin = {0, CoordVector(5, m.target)};
    NodeId at = 1 + uniform_below(rng, n);
    for (;;) {
      const auto d = ndmp::route_discovery(nodes.at(at), m);
      if (d.action == ndmp::RouteAction::terminate) break;
      at = d.next_hop;
      ++hops;
    }
    ++routes;
  }
  state.counters["hops"] = benchmark::Counter(static_cast<double>(hops) / static_cast<double>(routes));
}
BENCHMARK(BM_DiscoveryRoute)->Arg(100)->Arg(1000)->Arg(10000);

static void BM_SpectralLambda(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = topo::mixing_matrix(topo::fedlay_overlay(n, 5, 1));
  for (auto _ : state) benchmark::DoNotOptimize(topo::spectral_lambda(m));
}
BENCHMARK(BM_SpectralLambda)->Arg(100)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_RandomRegular(benchmark::State& state) {
  Rng rng = make_rng(1, "bench-rrg");
  for (auto _ : state) benchmark::DoNotOptimize(topo::random_regular_graph(300, 10, rng));
}
BENCHMARK(BM_RandomRegular)->Unit(benchmark::kMicrosecond);

static void BM_SequentialBuild(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    sim::SimConfig cfg;
    sim::Simulator s(cfg);
    benchmark::DoNotOptimize(s.bootstrap_sequential(n));
  }
}
BENCHMARK(BM_SequentialBuild)->Arg(125)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_ChurnSecond(benchmark::State& state) {
  sim::SimConfig cfg;
  sim::Simulator s(cfg);
  s.install_correct(400);
  s.start_maintenance();
  for (auto _ : state) s.run_until(s.now() + 1000);
  state.counters["msgs/s"] =
      benchmark::Counter(static_cast<double>(s.counters().total()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_ChurnSecond)->Unit(benchmark::kMillisecond);

static void BM_LocalTrain(benchmark::State& state) {
  dfl::SyntheticConfig c;
  c.train_size = static_cast<std::size_t>(state.range(0));
  c.test_size = 100;
  const auto data = dfl::make_synthetic(c, 1);
  const dfl::SoftmaxShape shape{c.dims, c.num_classes};
  auto p = dfl::zero_model(shape);
  for (auto _ : state) benchmark::DoNotOptimize(dfl::local_train(p, shape, data.train, 0.1, 1));
}
BENCHMARK(BM_LocalTrain)->Arg(100)->Arg(10000)->Unit(benchmark::kMicrosecond);

static void BM_Aggregate(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<double>> models(k, std::vector<double>(330, 0.5));
  std::vector<mep::WeightedModel> in;
  for (const auto& m : models) in.push_back({m, 1.0});
  for (auto _ : state) benchmark::DoNotOptimize(mep::aggregate(in));
}
BENCHMARK(BM_Aggregate)->Arg(10)->Arg(100);

static void BM_Fingerprint(benchmark::State& state) {
  std::vector<double> m(330, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(mep::fingerprint(m));
}
BENCHMARK(BM_Fingerprint);

BENCHMARK_MAIN();
