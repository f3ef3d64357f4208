#include <benchmark/benchmark.h>

#include "qempc/mpqp.hpp"
#include "qempc/protocol.hpp"
#include "qempc/simulation.hpp"

using namespace qempc;

namespace {

const Scenario& bench_scenario() {
  static const Scenario s = double_integrator_benchmark();
  return s;
}

const PwaController& bench_ctrl() {
  static const PwaController c = enumerate_regions(condense(bench_scenario().sys, bench_scenario().mpc));
  return c;
}

// One protocol cycle per iteration at a fixed state; arg 0 is the Paillier
// modulus size where it applies.
void cycle(benchmark::State& state, BackendKind kind) {
  BackendConfig cfg;
  cfg.modulus_bits = static_cast<unsigned>(state.range(0));
  cfg.w_b = 4;
  auto backend = make_backend(kind, bench_ctrl(), cfg);
  const Vector x = bench_scenario().initial_states[0];
  std::uint64_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(backend->run_cycle(k++, x));
}

void BM_Synthesis(benchmark::State& state) {
  const Scenario& s = bench_scenario();
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_regions(condense(s.sys, s.mpc)));
}

void BM_LocateRegion(benchmark::State& state) {
  const Vector x = bench_scenario().initial_states[1];
  for (auto _ : state) benchmark::DoNotOptimize(locate_region(bench_ctrl(), x));
}

}  // namespace

BENCHMARK_CAPTURE(cycle, plaintext, BackendKind::kPlaintext)->Arg(1024);
BENCHMARK_CAPTURE(cycle, qe, BackendKind::kQe)->Arg(1024);
BENCHMARK_CAPTURE(cycle, qe_quantized, BackendKind::kQeQuantized)->Arg(1024);
BENCHMARK_CAPTURE(cycle, paillier, BackendKind::kPaillier)
    ->Arg(1024)
    ->Arg(2048)
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Synthesis)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LocateRegion);

BENCHMARK_MAIN();
