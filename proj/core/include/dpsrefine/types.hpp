#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpsrefine {

using cdouble = std::complex<double>;

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidConfig : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ExternalDenoiserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Which representation a spectrogram currently holds: raw STFT values or
/// magnitude-compressed values |x|^0.5 * exp(j*angle(x)).
enum class Domain { stft, compressive };

enum class WindowType { sqrt_hann };

struct StftParams {
  int fft_size = 512;
  int hop_size = 128;
  WindowType window = WindowType::sqrt_hann;

  int bins() const { return fft_size / 2 + 1; }

  void validate() const {
    if (fft_size <= 0 || hop_size <= 0)
      throw InvalidConfig("StftParams: sizes must be positive");
    if (fft_size % hop_size != 0)
      throw InvalidConfig("StftParams: fft_size must be divisible by hop_size");
    if (hop_size > fft_size / 2)
      throw InvalidConfig("StftParams: hop_size must be <= fft_size/2");
  }

  bool operator==(const StftParams&) const = default;
};

/// Complex time-frequency tensor, frames x bins x channels.
/// Storage is frame-major, then bin, then channel, so a single-channel
/// spectrogram is laid out exactly frame-major/bin-minor and the per-(l,k)
/// channel vector is contiguous.
struct ComplexSpectrogram {
  int frames = 0;    // L
  int bins = 0;      // K
  int channels = 0;  // C
  Domain domain = Domain::stft;
  StftParams params{};
  std::int64_t n_samples = 0;  // waveform length recorded at analysis, 0 = unknown
  std::vector<cdouble> data;

  ComplexSpectrogram() = default;
  ComplexSpectrogram(int n_frames, int n_bins, int n_channels,
                     Domain dom = Domain::stft)
      : frames(n_frames), bins(n_bins), channels(n_channels), domain(dom),
        data(static_cast<std::size_t>(n_frames) * n_bins * n_channels) {}

  std::size_t index(int l, int k, int c) const {
    return (static_cast<std::size_t>(l) * bins + k) * channels + c;
  }
  cdouble& at(int l, int k, int c = 0) { return data[index(l, k, c)]; }
  const cdouble& at(int l, int k, int c = 0) const { return data[index(l, k, c)]; }

  std::size_t size() const { return data.size(); }

  bool same_shape(const ComplexSpectrogram& o) const {
    return frames == o.frames && bins == o.bins && channels == o.channels;
  }

  bool all_finite() const {
    for (const auto& v : data)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  /// Copies metadata (params, n_samples) but not shape or values.
  void copy_meta(const ComplexSpectrogram& src) {
    params = src.params;
    n_samples = src.n_samples;
  }
};

/// Per-bin multi-frame filter, taps x bins x channels.
struct MultiFrameFilter {
  int taps = 0;      // N_H
  int bins = 0;      // K
  int channels = 0;  // C
  std::vector<cdouble> data;

  MultiFrameFilter() = default;
  MultiFrameFilter(int n_taps, int n_bins, int n_channels)
      : taps(n_taps), bins(n_bins), channels(n_channels),
        data(static_cast<std::size_t>(n_taps) * n_bins * n_channels) {}

  std::size_t index(int n, int k, int c) const {
    return (static_cast<std::size_t>(n) * bins + k) * channels + c;
  }
  cdouble& at(int n, int k, int c = 0) { return data[index(n, k, c)]; }
  const cdouble& at(int n, int k, int c = 0) const { return data[index(n, k, c)]; }

  bool all_finite() const {
    for (const auto& v : data)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }
};

struct FcpParams {
  int n_taps = 13;
  double eps = 1e-3;

  void validate() const {
    if (n_taps < 1) throw InvalidConfig("FcpParams: n_taps must be >= 1");
    if (!(eps > 0)) throw InvalidConfig("FcpParams: eps must be > 0");
  }
};

}  // namespace dpsrefine
