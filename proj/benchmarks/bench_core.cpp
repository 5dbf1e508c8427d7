#include <array>
#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "fracdim/dimension.hpp"
#include "fracdim/fbm.hpp"
#include "fracdim/rde.hpp"
#include "fracdim/rough_path.hpp"
#include "fracdim/vector_fields.hpp"

namespace {

using namespace fracdim;

void bench_circulant(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const CirculantSampler sampler(TimeGrid::unit(n + 1), HurstParam(0.7));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(2, seed++));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void bench_cholesky(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const CholeskySampler sampler(TimeGrid::unit(n + 1), HurstParam(0.7));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(1, seed++));
}

void bench_lift(benchmark::State& state) {
  const auto depth = static_cast<std::size_t>(state.range(0));
  const SamplePath b = generate_circulant(TimeGrid::unit(4097), 2, HurstParam(0.4), 1);
  for (auto _ : state) benchmark::DoNotOptimize(lift_path(b, depth));
}

void bench_solve(benchmark::State& state) {
  const auto kind = state.range(0) == 2 ? SchemeKind::step2_davie : SchemeKind::step3;
  const SamplePath b = generate_circulant(TimeGrid::unit(4097), 2, HurstParam(0.45), 1);
  const SignaturePath sig = lift_path(b, scheme_depth(kind));
  const VectorFieldSet fields = field_catalog("elliptic_sin_2d", 2);
  const std::vector<double> x0{0.0, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(solve(fields, x0, sig, {kind, 0}));
}

void bench_box_count(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PointCloud cloud = image_cloud(generate_circulant(TimeGrid::unit(n + 1), 2, HurstParam(0.75), 3));
  for (auto _ : state) benchmark::DoNotOptimize(box_count(cloud, 1e-3));
}

void bench_energy(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const SamplePath p = generate_circulant(TimeGrid::unit(n + 1), 2, HurstParam(0.75), 4);
  const std::array<double, 2> window{0.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(energy_integral(p, 1.2, window));
}

}  // namespace

BENCHMARK(bench_circulant)->RangeMultiplier(4)->Range(1 << 10, 1 << 18)->Unit(benchmark::kMicrosecond);
BENCHMARK(bench_cholesky)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);
BENCHMARK(bench_lift)->Arg(2)->Arg(3)->Unit(benchmark::kMicrosecond);
BENCHMARK(bench_solve)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_box_count)->Arg(1 << 14)->Arg(1 << 16)->Unit(benchmark::kMicrosecond);
BENCHMARK(bench_energy)->Arg(1 << 10)->Arg(1 << 12)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
