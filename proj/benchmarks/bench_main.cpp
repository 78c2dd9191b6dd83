#include <benchmark/benchmark.h>

#include "kflow/flowcore.hpp"
#include "kflow/metrics.hpp"

using namespace kflow;

namespace {

KernelSpec kernel_for(int which, int n) {
  switch (which) {
    case 0: return KernelSpec::rbfg(1.0);
    case 1: return KernelSpec::mog();
    case 2: return KernelSpec::imq(1.0);
    default: return KernelSpec::phs(1, n);
  }
}

void BM_KernelGrad(benchmark::State& state) {
  const int n = static_cast<int>(state.range(1));
  const KernelSpec k = kernel_for(static_cast<int>(state.range(0)), n);
  Prng rng(1);
  const Vector x = sample_std_normal(rng, static_cast<std::size_t>(n));
  for (auto _ : state) benchmark::DoNotOptimize(kernel_grad(k, x));
  state.SetLabel(k.describe());
}
BENCHMARK(BM_KernelGrad)->ArgsProduct({{0, 1, 2, 3}, {2, 128}});

void BM_FlowResidualBatch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto centers = static_cast<std::size_t>(state.range(1));
  Prng rng(2);
  const ParticleSet x = sample_std_normal(rng, 100, n);
  const ParticleSet data = sample_std_normal(rng, centers, n);
  const ParticleSet gen = sample_std_normal(rng, centers, n);
  const KernelSpec k = KernelSpec::phs(1, static_cast<int>(n));
  for (auto _ : state) benchmark::DoNotOptimize(flow_residual(k, x, data, gen));
  state.SetItemsProcessed(state.iterations() * 100 * static_cast<long>(2 * centers));
}
BENCHMARK(BM_FlowResidualBatch)->Args({2, 500})->Args({128, 100});

void BM_FlowGanStep(benchmark::State& state) {
  Prng rng(3);
  const Generator g = Generator::mlp({2, 32, 16, 2}, 0.2, rng);
  const ParticleSet z = sample_std_normal(rng, 256, 2);
  const ParticleSet data = sample_std_normal(rng, 256, 2);
  const ParticleSet prev = g.forward(sample_std_normal(rng, 256, 2));
  const KernelSpec k = KernelSpec::phs(1, 2);
  const auto mode = state.range(0) == 0 ? FlowGradient::Transport : FlowGradient::Exact;
  for (auto _ : state) benchmark::DoNotOptimize(flowgan_loss(g, z, data, prev, k, mode));
}
BENCHMARK(BM_FlowGanStep)->Arg(0)->Arg(1);

void BM_EnergyDistance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Prng rng(4);
  const ParticleSet a = sample_std_normal(rng, n, 2);
  const EnergyDistanceTo ed(sample_std_normal(rng, n, 2));
  for (auto _ : state) benchmark::DoNotOptimize(ed(a));
}
BENCHMARK(BM_EnergyDistance)->Arg(250)->Arg(1000);

void BM_LangevinStep(benchmark::State& state) {
  Prng rng(5);
  const ParticleSet init = sample_std_normal(rng, 1000, 2);
  const ParticleSet pool = sample_std_normal(rng, 2000, 2);
  LangevinSchedule s;
  s.horizon = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(langevin_run(init, pool, KernelSpec::phs(1, 2), 1.0, s, 1000, rng));
}
BENCHMARK(BM_LangevinStep)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
