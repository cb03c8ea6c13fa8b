#include <benchmark/benchmark.h>

#include "compsnn/density.hpp"
#include "compsnn/gradcheck.hpp"
#include "compsnn/graph.hpp"
#include "compsnn/model.hpp"
#include "compsnn/rng.hpp"
#include "compsnn/spectrum.hpp"

using namespace compsnn;

namespace {

TrajectoryGraph random_graph(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::vector<NodeId>> seqs;
  for (std::size_t i = 1; i < n; ++i) seqs.push_back({static_cast<NodeId>(rng.below(i)), static_cast<NodeId>(i)});
  for (std::size_t e = 0; e < 2 * n; ++e)
    seqs.push_back({static_cast<NodeId>(rng.below(n)), static_cast<NodeId>(rng.below(n))});
  return build_graph(seqs, n, std::vector<Point>(n));
}

DensityGrid random_grid(std::size_t side, std::uint64_t seed) {
  SplitMix64 rng(seed);
  DensityGrid g;
  g.cell_size = 1.0;
  g.bounds = {0, static_cast<double>(side), 0, static_cast<double>(side)};
  g.counts = Raster<double>(side, side);
  for (int b = 0; b < 40; ++b) {
    const double cr = rng.uniform(0, side), cc = rng.uniform(0, side), rad = rng.uniform(2, 8);
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t c = 0; c < side; ++c) {
        const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
        if (d2 < rad * rad) g.counts(r, c) += std::floor(10 * (1 - d2 / (rad * rad))) + 1;
      }
  }
  return g;
}

}  // namespace

static void BM_Jacobi(benchmark::State& state) {
  const Matrix l = laplacian(random_graph(static_cast<std::size_t>(state.range(0)), 1));
  for (auto _ : state) benchmark::DoNotOptimize(eigendecompose(l));
}
BENCHMARK(BM_Jacobi)->Arg(30)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

static void BM_Watershed(benchmark::State& state) {
  const DensityGrid g = random_grid(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(segment_density(g));
}
BENCHMARK(BM_Watershed)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_ModelForwardBackward(benchmark::State& state) {
  const auto kind = static_cast<ModelKind>(state.range(0));
  const std::size_t n = 300;
  SplitMix64 rng(3);
  CompSnnConfig cfg;
  cfg.node_count = n;
  const Spectrum spectrum = eigendecompose(laplacian(random_graph(n, 4)));
  ModelInput in{NodeSignal{n, std::vector<double>(n * kNodeChannels)}, std::vector<double>(n), FeatureSeries(400)};
  for (double& v : in.node_signal.values) v = rng.uniform(-1, 1);
  for (double& v : in.visits) v = rng.uniform();
  for (double& v : in.features.values()) v = rng.normal();
  const std::vector<double> target(8, 0.5);
  ModelParams model = init_model(kind, cfg, 5);
  for (auto _ : state) {
    model.params.zero_grad();
    benchmark::DoNotOptimize(accumulate_sample_gradient(model, in, spectrum, target));
  }
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_ModelForwardBackward)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

static void BM_GradcheckSuite(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(run_gradcheck_suite());
}
BENCHMARK(BM_GradcheckSuite)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK_MAIN();
