#include "dpsrefine/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dpsrefine {

namespace {

constexpr double kOlaDenomFloor = 1e-12;

int frame_count(std::int64_t n_samples, int hop) {
  // 1 + ceil(n / hop); centered framing.
  return static_cast<int>(1 + (n_samples + hop - 1) / hop);
}

}  // namespace

std::vector<double> make_sqrt_hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n));
  return w;
}

ComplexSpectrogram stft(const std::vector<std::vector<double>>& wave,
                        const StftParams& params) {
  params.validate();
  if (wave.empty()) throw InvalidInput("stft: no channels");
  const std::int64_t n = static_cast<std::int64_t>(wave[0].size());
  for (const auto& ch : wave) {
    if (static_cast<std::int64_t>(ch.size()) != n)
      throw InvalidInput("stft: channels differ in length");
    for (double s : ch)
      if (!std::isfinite(s)) throw InvalidInput("stft: non-finite sample");
  }

  const int fft = params.fft_size;
  const int hop = params.hop_size;
  const int K = params.bins();
  const int L = frame_count(n, hop);
  const int C = static_cast<int>(wave.size());
  const int pad_left = fft / 2;
  const std::int64_t padded_len =
      static_cast<std::int64_t>(L - 1) * hop + fft;

  const std::vector<double> window = make_sqrt_hann(fft);

  ComplexSpectrogram out(L, K, C);
  out.params = params;
  out.n_samples = n;

  Eigen::FFT<double> fft_engine;
  std::vector<cdouble> frame(fft), spectrum(fft);
  std::vector<double> padded(static_cast<std::size_t>(padded_len), 0.0);

  for (int c = 0; c < C; ++c) {
    std::fill(padded.begin(), padded.end(), 0.0);
    std::copy(wave[c].begin(), wave[c].end(), padded.begin() + pad_left);
    for (int l = 0; l < L; ++l) {
      const std::int64_t start = static_cast<std::int64_t>(l) * hop;
      for (int j = 0; j < fft; ++j)
        frame[j] = cdouble(window[j] * padded[start + j], 0.0);
      fft_engine.fwd(spectrum, frame);
      for (int k = 0; k < K; ++k) out.at(l, k, c) = spectrum[k];
    }
  }
  return out;
}

ComplexSpectrogram stft(const std::vector<double>& mono_wave,
                        const StftParams& params) {
  return stft(std::vector<std::vector<double>>{mono_wave}, params);
}

std::vector<std::vector<double>> istft(const ComplexSpectrogram& spec) {
  spec.params.validate();
  if (spec.domain == Domain::compressive)
    throw DomainMismatch("istft: spectrogram is in the compressive domain");
  const int fft = spec.params.fft_size;
  const int hop = spec.params.hop_size;
  const int K = spec.params.bins();
  if (spec.bins != K) throw InvalidInput("istft: bin count does not match params");

  const int L = spec.frames;
  const int C = spec.channels;
  const int pad_left = fft / 2;
  const std::int64_t padded_len = static_cast<std::int64_t>(L - 1) * hop + fft;
  const std::int64_t n_out =
      spec.n_samples > 0 ? spec.n_samples : static_cast<std::int64_t>(L - 1) * hop;

  const std::vector<double> window = make_sqrt_hann(fft);

  // Window-power sum per padded position, shared across channels.
  std::vector<double> wsum(static_cast<std::size_t>(padded_len), 0.0);
  for (int l = 0; l < L; ++l) {
    const std::int64_t start = static_cast<std::int64_t>(l) * hop;
    for (int j = 0; j < fft; ++j) wsum[start + j] += window[j] * window[j];
  }

  Eigen::FFT<double> fft_engine;
  std::vector<cdouble> spectrum(fft), frame(fft);
  std::vector<std::vector<double>> out(
      C, std::vector<double>(static_cast<std::size_t>(std::max<std::int64_t>(n_out, 0)), 0.0));
  std::vector<double> acc(static_cast<std::size_t>(padded_len));

  for (int c = 0; c < C; ++c) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int l = 0; l < L; ++l) {
      // Rebuild the full spectrum from the one-sided half (Hermitian).
      for (int k = 0; k < K; ++k) spectrum[k] = spec.at(l, k, c);
      for (int k = 1; k < fft / 2; ++k) spectrum[fft - k] = std::conj(spec.at(l, k, c));
      fft_engine.inv(frame, spectrum);
      const std::int64_t start = static_cast<std::int64_t>(l) * hop;
      for (int j = 0; j < fft; ++j) acc[start + j] += window[j] * frame[j].real();
    }
    for (std::int64_t i = 0; i < n_out; ++i) {
      const std::int64_t p = i + pad_left;
      if (p < padded_len && wsum[p] > kOlaDenomFloor) out[c][i] = acc[p] / wsum[p];
    }
  }
  return out;
}

std::vector<double> istft_mono(const ComplexSpectrogram& spec) {
  if (spec.channels != 1) throw InvalidInput("istft_mono: expected one channel");
  return istft(spec)[0];
}

ComplexSpectrogram compress(const ComplexSpectrogram& spec) {
  if (spec.domain != Domain::stft)
    throw DomainMismatch("compress: input is not in the STFT domain");
  ComplexSpectrogram out = spec;
  out.domain = Domain::compressive;
  for (auto& v : out.data) {
    const double m = std::max(std::abs(v), kMagnitudeFloor);
    v *= 1.0 / std::sqrt(m);
  }
  return out;
}

ComplexSpectrogram decompress(const ComplexSpectrogram& spec) {
  if (spec.domain != Domain::compressive)
    throw DomainMismatch("decompress: input is not in the compressive domain");
  ComplexSpectrogram out = spec;
  out.domain = Domain::stft;
  for (auto& v : out.data) v *= std::abs(v);
  return out;
}

ComplexSpectrogram decompress_vjp(const ComplexSpectrogram& x_prime,
                                  const ComplexSpectrogram& cotangent) {
  if (x_prime.domain != Domain::compressive)
    throw DomainMismatch("decompress_vjp: linearization point must be compressive");
  if (!x_prime.same_shape(cotangent))
    throw InvalidInput("decompress_vjp: shape mismatch");
  ComplexSpectrogram out = cotangent;
  out.copy_meta(x_prime);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const cdouble x = x_prime.data[i];
    const double r = std::max(std::abs(x), kMagnitudeFloor);
    const cdouble c = cotangent.data[i];
    // (r*I + vv^T/r) applied to the (real, imag) pair; vv^T c == v * <v, c>.
    const double vdotc = x.real() * c.real() + x.imag() * c.imag();
    out.data[i] = r * c + (vdotc / r) * x;
  }
  return out;
}

}  // namespace dpsrefine
