#include <benchmark/benchmark.h>

#include <vector>

#include "gridres/numerics.hpp"
#include "gridres/simulation.hpp"
#include "gridres/surrogate.hpp"
#include "gridres/topology.hpp"

using namespace gridres;

namespace {

GridTopology grid(int areas, int poles) {
  TopologyGenConfig c;
  c.n_service_areas = areas;
  c.poles_per_area = {poles, poles};
  c.buildings_per_area = {poles, 2 * poles};
  return generate_topology(c, RngStream(1, 1));
}

void BM_kmeans(benchmark::State& state) {
  RngStream rng(3, 3);
  std::vector<Point2D> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = {rng.uniform(0, 10), rng.uniform(0, 10)};
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(pts, 16, RngStream(4, 4)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_kmeans)->Arg(256)->Arg(4096);

void BM_customers_served(benchmark::State& state) {
  const auto topo = grid(55, static_cast<int>(state.range(0)));
  RngStream rng(5, 5);
  std::vector<char> mask(topo.lines().size());
  for (auto& m : mask) m = rng.bernoulli(0.05) ? 1 : 0;
  for (auto _ : state) benchmark::DoNotOptimize(topo.customers_served(mask));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(mask.size()));
}
BENCHMARK(BM_customers_served)->Arg(100)->Arg(400);

SurrogateModel model(int hidden, int layers) {
  SurrogateConfig c;
  c.gru_hidden = hidden;
  c.gru_layers = layers;
  c.mlp_layers = 3;
  c.input_dim = 18;
  c.n_systems = 4;
  c.mlp_dropout = 0.0;
  return SurrogateModel::initialize(c, {"a", "b", "c", "d"}, {}, 7);
}

std::vector<TrainingSample> batch(std::size_t n, std::size_t steps) {
  RngStream rng(9, 9);
  std::vector<TrainingSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    TrainingSample s;
    s.sequence = Sequence(steps, 18);
    for (double& v : s.sequence.values) v = rng.uniform();
    s.system = static_cast<int>(i % 4);
    s.label = rng.uniform();
    out.push_back(std::move(s));
  }
  return out;
}

void BM_gru_forward(benchmark::State& state) {
  const auto m = model(static_cast<int>(state.range(0)), 1);
  const auto b = batch(1, 12);
  for (auto _ : state) benchmark::DoNotOptimize(gru_forward(m, b[0].sequence));
}
BENCHMARK(BM_gru_forward)->Arg(16)->Arg(128);

void BM_backward(benchmark::State& state) {
  const auto m = model(16, 4);
  const auto b = batch(32, 12);
  for (auto _ : state) benchmark::DoNotOptimize(backward(m, b));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_backward);

void BM_run_episode(benchmark::State& state) {
  const auto topo = grid(8, 180);
  EpisodeSettings s;
  s.recovery.n_teams = 3;
  const auto ctx = make_context(topo, s, 1);
  std::uint64_t e = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_episode(ctx, s, 1, e++));
}
BENCHMARK(BM_run_episode);

}  // namespace
