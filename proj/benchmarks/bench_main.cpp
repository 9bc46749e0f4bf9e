#include <benchmark/benchmark.h>

#include <random>

#include "dpsrefine/diffusion.hpp"
#include "dpsrefine/fcp.hpp"
#include "dpsrefine/guidance.hpp"
#include "dpsrefine/noise_model.hpp"
#include "dpsrefine/spectral.hpp"

using namespace dpsrefine;

namespace {

ComplexSpectrogram random_spec(int L, int K, int C, std::mt19937_64& rng,
                               Domain dom = Domain::stft) {
  std::normal_distribution<double> g;
  ComplexSpectrogram s(L, K, C, dom);
  for (auto& v : s.data) v = {g(rng), g(rng)};
  return s;
}

void BM_Stft(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> wave(64000);
  for (auto& v : wave) v = g(rng);
  StftParams p;
  for (auto _ : state) benchmark::DoNotOptimize(stft(wave, p));
}
BENCHMARK(BM_Stft)->Unit(benchmark::kMillisecond);

void BM_Istft(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> wave(64000);
  for (auto& v : wave) v = g(rng);
  StftParams p;
  const auto spec = stft(wave, p);
  for (auto _ : state) benchmark::DoNotOptimize(istft(spec));
}
BENCHMARK(BM_Istft)->Unit(benchmark::kMillisecond);

void BM_EstimateFilter(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const int C = static_cast<int>(state.range(1));
  std::mt19937_64 rng(3);
  const auto X = random_spec(L, 257, 1, rng);
  const auto Y = random_spec(L, 257, C, rng);
  FcpParams p;  // 13 taps
  for (auto _ : state) benchmark::DoNotOptimize(estimate_filter(X, Y, p));
}
BENCHMARK(BM_EstimateFilter)
    ->Args({126, 2})
    ->Args({501, 4})
    ->Unit(benchmark::kMillisecond);

void BM_ApplyFilter(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const auto X = random_spec(501, 257, 1, rng);
  MultiFrameFilter h(13, 257, 4);
  std::normal_distribution<double> g;
  for (auto& v : h.data) v = {g(rng), g(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(apply_filter(h, X));
}
BENCHMARK(BM_ApplyFilter)->Unit(benchmark::kMillisecond);

void BM_LikelihoodScore(benchmark::State& state) {
  const auto sched = make_schedule(1000, 1e-4, 0.02);
  std::mt19937_64 rng(5);
  const int L = 126, K = 257, C = 4;
  const auto x_t = random_spec(L, K, 1, rng, Domain::compressive);
  const auto Y = random_spec(L, K, C, rng);
  const auto phi_inv = invert_scm(estimate_scm(random_spec(L, K, C, rng), 0.95));
  const auto mu = random_spec(L, K, 1, rng, Domain::compressive);
  GaussianAnalyticDenoiser den(mu, 0.3, sched);
  FcpParams fcp;
  for (auto _ : state)
    benchmark::DoNotOptimize(likelihood_score(x_t, den, Y, phi_inv, fcp, 300,
                                              sched, JacobianPolicy::exact_vjp));
}
BENCHMARK(BM_LikelihoodScore)->Unit(benchmark::kMillisecond);

void BM_EstimateScm(benchmark::State& state) {
  std::mt19937_64 rng(6);
  const auto N = random_spec(501, 257, 4, rng);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_scm(N, 0.95));
}
BENCHMARK(BM_EstimateScm)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
