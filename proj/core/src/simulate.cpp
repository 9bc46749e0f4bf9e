#include "dpsrefine/simulate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpsrefine/fcp.hpp"
#include "dpsrefine/rng.hpp"

namespace dpsrefine {

namespace {

constexpr std::uint64_t kStreamTaps = 0x51301;
constexpr std::uint64_t kStreamNoise = 0x51302;
constexpr std::uint64_t kStreamScm = 0x51303;
constexpr double kTapDecay = 0.6;
constexpr double kInvSqrt2 = 0.7071067811865475244;

double power(const ComplexSpectrogram& s, int channel) {
  double acc = 0.0;
  for (int l = 0; l < s.frames; ++l)
    for (int k = 0; k < s.bins; ++k) acc += std::norm(s.at(l, k, channel));
  return acc;
}

}  // namespace

Mixture gen_mixture(const ComplexSpectrogram& X_clean, const MixtureSpec& spec) {
  spec.validate();
  if (X_clean.channels != 1)
    throw InvalidInput("gen_mixture: X_clean must be single-channel");
  if (!X_clean.all_finite()) throw InvalidInput("gen_mixture: non-finite input");

  const int L = X_clean.frames;
  const int K = X_clean.bins;
  const int C = spec.channels;
  const int N = spec.n_taps;

  Mixture mix;

  // Random transfer filter with geometric tap decay.
  mix.H_true = MultiFrameFilter(N, K, C);
  {
    const CounterRng rng(spec.seed, kStreamTaps);
    for (int n = 0; n < N; ++n) {
      const double g = std::pow(kTapDecay, n) * kInvSqrt2;
      for (int k = 0; k < K; ++k)
        for (int c = 0; c < C; ++c) {
          const std::size_t i = mix.H_true.index(n, k, c);
          mix.H_true.data[i] = {g * rng.normal(2 * i), g * rng.normal(2 * i + 1)};
        }
    }
  }

  const ComplexSpectrogram reverb = apply_filter(mix.H_true, X_clean);

  // Per-bin noise covariance, constant over frames.
  std::vector<Eigen::MatrixXcd> chol(K);
  mix.Phi_true = NoiseSCMField(L, K, C);
  {
    const CounterRng rng(spec.seed, kStreamScm);
    for (int k = 0; k < K; ++k) {
      Eigen::MatrixXcd phi(C, C);
      if (spec.noise == NoiseKind::white) {
        phi = Eigen::MatrixXcd::Identity(C, C);
      } else {
        Eigen::MatrixXcd b(C, C);
        for (int i = 0; i < C; ++i)
          for (int j = 0; j < C; ++j) {
            const std::size_t idx = (static_cast<std::size_t>(k) * C + i) * C + j;
            b(i, j) = cdouble(kInvSqrt2 * rng.normal(2 * idx),
                              kInvSqrt2 * rng.normal(2 * idx + 1));
          }
        phi = b * b.adjoint();
        phi.diagonal().array() += 0.1 * phi.real().trace() / C;
        phi *= static_cast<double>(C) / phi.real().trace();
      }
      chol[k] = phi.llt().matrixL();
      for (int l = 0; l < L; ++l)
        Eigen::Map<Eigen::MatrixXcd>(mix.Phi_true.data.data() + mix.Phi_true.offset(l, k),
                                     C, C) = phi;
    }
  }

  // Draw the noise and scale it to hit the requested reference-channel SNR.
  mix.N_true = ComplexSpectrogram(L, K, C, X_clean.domain);
  mix.N_true.copy_meta(X_clean);
  const bool noiseless = std::isinf(spec.snr_db) && spec.snr_db > 0;
  if (!noiseless) {
    const CounterRng rng(spec.seed, kStreamNoise);
    Eigen::VectorXcd g(C), n(C);
    for (int l = 0; l < L; ++l)
      for (int k = 0; k < K; ++k) {
        for (int c = 0; c < C; ++c) {
          const std::size_t idx = mix.N_true.index(l, k, c);
          g(c) = cdouble(kInvSqrt2 * rng.normal(2 * idx),
                         kInvSqrt2 * rng.normal(2 * idx + 1));
        }
        n = chol[k] * g;
        for (int c = 0; c < C; ++c) mix.N_true.at(l, k, c) = n(c);
      }

    const double sig_pow = power(reverb, 0);
    const double noise_pow = power(mix.N_true, 0);
    if (noise_pow > 0.0) {
      const double target = sig_pow / std::pow(10.0, spec.snr_db / 10.0);
      const double scale = std::sqrt(target / noise_pow);
      for (auto& v : mix.N_true.data) v *= scale;
      for (auto& v : mix.Phi_true.data) v *= scale * scale;
    }
  } else {
    for (auto& v : mix.Phi_true.data) v = 0.0;
  }

  mix.Y = reverb;
  for (std::size_t i = 0; i < mix.Y.data.size(); ++i)
    mix.Y.data[i] += mix.N_true.data[i];

  const double np = power(mix.N_true, 0);
  mix.realized_snr_db = np > 0.0
                            ? 10.0 * std::log10(power(reverb, 0) / np)
                            : std::numeric_limits<double>::infinity();
  return mix;
}

double si_sdr(const std::vector<double>& est, const std::vector<double>& ref) {
  if (est.size() != ref.size()) throw InvalidInput("si_sdr: length mismatch");
  if (ref.empty()) throw InvalidInput("si_sdr: empty reference");

  double dot = 0.0, ref2 = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    dot += est[i] * ref[i];
    ref2 += ref[i] * ref[i];
  }
  if (ref2 == 0.0) throw InvalidInput("si_sdr: reference is identically zero");

  const double a = dot / ref2;
  const double target2 = a * a * ref2;
  double resid2 = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double e = est[i] - a * ref[i];
    resid2 += e * e;
  }

  if (resid2 == 0.0) return kSiSdrCapDb;
  if (target2 == 0.0) return -kSiSdrCapDb;
  const double v = 10.0 * std::log10(target2 / resid2);
  return std::clamp(v, -kSiSdrCapDb, kSiSdrCapDb);
}

}  // namespace dpsrefine
