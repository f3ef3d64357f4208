#include <benchmark/benchmark.h>

#include <random>

#include "qempc/paillier.hpp"
#include "qempc/qe_cipher.hpp"

using namespace qempc;

namespace {

void BM_QeEncrypt(benchmark::State& state) {
  double z = 0.25;
  for (auto _ : state) {
    benchmark::DoNotOptimize(qe::enc_scalar(z, 12345));
    z += 1e-9;
  }
}

void BM_QeQuantize(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto w = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(qe::quantize_stochastic(1.3, w, rng));
}

void BM_PaillierEncrypt(benchmark::State& state) {
  he::Random rng(2);
  const he::Keypair kp = he::keygen(static_cast<unsigned>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(he::encrypt(12345, kp.pub, rng));
}

void BM_PaillierScalarMul(benchmark::State& state) {
  he::Random rng(3);
  const he::Keypair kp = he::keygen(static_cast<unsigned>(state.range(0)), rng);
  const he::Ciphertext c = he::encrypt(777, kp.pub, rng);
  const mpz_class a = rng.bits(32);
  for (auto _ : state) benchmark::DoNotOptimize(he::scalar_mul(a, c, kp.pub));
}

}  // namespace

BENCHMARK(BM_QeEncrypt);
BENCHMARK(BM_QeQuantize)->Arg(16)->Arg(32);
BENCHMARK(BM_PaillierEncrypt)->Arg(1024)->Arg(2048)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PaillierScalarMul)->Arg(1024)->Arg(2048)->Unit(benchmark::kMicrosecond);
