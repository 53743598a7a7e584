// Serial references against the OpenMP kernels on identical inputs.
#include <benchmark/benchmark.h>

#include "dmf/estimate.hpp"
#include "dmf/measure.hpp"
#include "dmf/model.hpp"
#include "dmf/oracle.hpp"
#include "dmf/rs.hpp"

namespace {

dmf::ModelSpec spec() {
  dmf::ModelSpec s;
  s.beta = 1.0;
  s.alpha = 0.5;
  return s;
}

const dmf::Population& zeta() {
  static const dmf::Population pop =
      dmf::materialize(dmf::ScalarLaw{dmf::LeafFamily::gaussian, 0.0, 1.0}, 10000, 3);
  return pop;
}

void BM_RsBoundParallel(benchmark::State& state) {
  const auto s = spec();
  dmf::RSConfig cfg;
  cfg.n_outer = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dmf::rs_bound(s, zeta(), cfg, 1).value);
}

void BM_RsBoundSerialWorker(benchmark::State& state) {
  const auto s = spec();
  dmf::RSConfig cfg;
  cfg.n_outer = static_cast<std::size_t>(state.range(0));
  cfg.exec.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(dmf::rs_bound(s, zeta(), cfg, 1).value);
}

void BM_DynamicsParallel(benchmark::State& state) {
  const auto s = spec();
  dmf::RSConfig cfg;
  for (auto _ : state)
    benchmark::DoNotOptimize(dmf::population_dynamics_step(s, zeta(), cfg, 1, 0).size());
}

void BM_DynamicsSerial(benchmark::State& state) {
  const auto s = spec();
  dmf::RSConfig cfg;
  for (auto _ : state)
    benchmark::DoNotOptimize(dmf::population_dynamics_step_serial(s, zeta(), cfg, 1, 0).size());
}

void BM_FreeEnergyParallel(benchmark::State& state) {
  const auto s = spec();
  for (auto _ : state)
    benchmark::DoNotOptimize(dmf::estimate_free_energy(s, static_cast<int>(state.range(0)), 64, 1).value);
}

void BM_FreeEnergySerial(benchmark::State& state) {
  const auto s = spec();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        dmf::estimate_free_energy_serial(s, static_cast<int>(state.range(0)), 64, 1).value);
}

}  // namespace

BENCHMARK(BM_RsBoundParallel)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RsBoundSerialWorker)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DynamicsParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DynamicsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FreeEnergyParallel)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FreeEnergySerial)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
