#include "spherepack/geometry.hpp"
#include "spherepack/loss.hpp"
#include "spherepack/metrics.hpp"
#include "spherepack/optimizer.hpp"
#include "spherepack/rng.hpp"
#include "spherepack/vssa.hpp"

#include <benchmark/benchmark.h>

using namespace spherepack;

namespace {

const TriangleMesh& ball() {
  static const TriangleMesh m = [] {
    std::vector<Vec3> v;
    std::vector<Face> f;
    make_icosphere(3, 1.0, v, f);
    return TriangleMesh(v, f);
  }();
  return m;
}

std::vector<Sphere> spheres(std::size_t n) {
  Rng rng(5);
  std::vector<Sphere> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(-0.6, 0.6);
    const double y = rng.uniform(-0.6, 0.6);
    const double z = rng.uniform(-0.6, 0.6);
    out.push_back({Vec3(x, y, z), rng.uniform(0.1, 0.4)});
  }
  return out;
}

void BM_EvaluateGradients(benchmark::State& state) {
  const SampleSet samples = make_sample_set(ball(), 20000, 20000, 1);
  const auto s = spheres(static_cast<std::size_t>(state.range(0)));
  const WeightConfig w = preset("B");
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_gradients(samples, s, w));
  state.SetItemsProcessed(state.iterations() * 40000 * state.range(0));
}
BENCHMARK(BM_EvaluateGradients)->Arg(1)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ContainsPoint(benchmark::State& state) {
  Rng rng(2);
  std::vector<Vec3> points;
  for (int i = 0; i < 4096; ++i) {
    const double x = rng.uniform(-1.2, 1.2);
    const double y = rng.uniform(-1.2, 1.2);
    const double z = rng.uniform(-1.2, 1.2);
    points.emplace_back(x, y, z);
  }
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(contains_point_or_outside(ball(), points[i++ & 4095]));
}
BENCHMARK(BM_ContainsPoint);

void BM_VolumeRatios(benchmark::State& state) {
  SphereSet set;
  set.spheres = spheres(25);
  for (auto _ : state) benchmark::DoNotOptimize(volume_ratios(ball(), set, 200000, 3));
}
BENCHMARK(BM_VolumeRatios)->Unit(benchmark::kMillisecond);

void BM_Pack(benchmark::State& state) {
  OptimizerConfig c = OptimizerConfig::defaults_for(ball());
  c.max_iters = 200;
  c.interior_samples = 5000;
  c.surface_samples = 5000;
  for (auto _ : state) benchmark::DoNotOptimize(pack(ball(), 10, preset("B"), c, 4));
}
BENCHMARK(BM_Pack)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_Vssa(benchmark::State& state) {
  const SampleSet samples = make_sample_set(ball(), 5000, 1000, 6);
  VssaConfig c;
  c.n_spheres = 10;
  c.seed = 6;
  for (auto _ : state) benchmark::DoNotOptimize(vssa_pack(ball(), samples, c));
}
BENCHMARK(BM_Vssa)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
