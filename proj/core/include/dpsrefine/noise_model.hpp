#pragma once

#include <vector>

#include "dpsrefine/types.hpp"

namespace dpsrefine {

/// Per-(frame, bin) Hermitian C x C spatial covariance matrices, stored
/// flat column-major per matrix.
struct NoiseSCMField {
  int frames = 0;
  int bins = 0;
  int channels = 0;
  double smoothing = 0.0;
  std::vector<cdouble> data;

  NoiseSCMField() = default;
  NoiseSCMField(int n_frames, int n_bins, int n_channels)
      : frames(n_frames), bins(n_bins), channels(n_channels),
        data(static_cast<std::size_t>(n_frames) * n_bins * n_channels * n_channels) {}

  std::size_t offset(int l, int k) const {
    return (static_cast<std::size_t>(l) * bins + k) * channels * channels;
  }
  /// Column-major element (row, col) of the matrix at (l, k).
  cdouble& at(int l, int k, int row, int col) {
    return data[offset(l, k) + static_cast<std::size_t>(col) * channels + row];
  }
  const cdouble& at(int l, int k, int row, int col) const {
    return data[offset(l, k) + static_cast<std::size_t>(col) * channels + row];
  }
};

/// Relative diagonal loading applied before inverting frame-level SCMs.
inline constexpr double kScmLoadingRel = 1e-4;

/// Scale of the EMA carry-in load, relative to the mean per-bin noise power:
/// the recursion starts from N(0,k) N(0,k)^H + kScmInitLoadRel * p_mean * I.
/// The carry-in decays as alpha^(l+1), so this only conditions the first
/// ~1/(1-alpha) frames, where fewer than C outer products have mixed and the
/// plain outer-product start is rank deficient enough to put ~1/loading
/// amplification into the inverse.
inline constexpr double kScmInitLoadRel = 1.0;

/// Noise estimate from the discriminative output: fits a multi-frame filter
/// mapping X_tilde onto Y, then returns the residual Y - H * X_tilde.
ComplexSpectrogram estimate_noise(const ComplexSpectrogram& Y,
                                  const ComplexSpectrogram& X_tilde,
                                  const FcpParams& fcp);

/// Recursive exponential moving average of the per-frame outer products
/// N N^H with smoothing alpha in [0, 1). The carry-in at frame 0 is
/// N(0,k) N(0,k)^H plus a small diagonal load so early frames stay
/// invertible. Output is Hermitian PSD by construction.
NoiseSCMField estimate_scm(const ComplexSpectrogram& N, double alpha);

/// Per-(frame, bin) inverse (Phi + delta*I)^-1 with relative loading
/// delta = delta_rel * trace(Phi) / C (absolute delta_rel when the trace
/// vanishes). Always succeeds; output is Hermitian positive definite.
NoiseSCMField invert_scm(const NoiseSCMField& phi, double delta_rel = kScmLoadingRel);

/// Lighter loading for the time-invariant Wiener filter, whose statistics
/// are full-utterance averages and far better conditioned than frame-level
/// SCMs.
inline constexpr double kMcwfLoadingRel = 1e-8;

/// Per-bin spatial weight vectors of the time-invariant Wiener filter.
struct McwfFilter {
  int bins = 0;
  int channels = 0;
  std::vector<cdouble> w;  // bin-major, channel-minor

  cdouble& at(int k, int c) { return w[static_cast<std::size_t>(k) * channels + c]; }
  const cdouble& at(int k, int c) const {
    return w[static_cast<std::size_t>(k) * channels + c];
  }
};

/// w(k) = (Phi_YY(k) + delta*I)^-1 phi_YX(k) with full-utterance statistics
/// Phi_YY(k) = mean_l Y Y^H and phi_YX(k) = mean_l Y conj(X_tilde).
McwfFilter mcwf_design(const ComplexSpectrogram& Y,
                       const ComplexSpectrogram& X_tilde,
                       double delta_rel = kMcwfLoadingRel);

/// output(l,k) = w(k)^H Y(l,k); a fixed per-bin linear map of Y.
ComplexSpectrogram mcwf_apply(const McwfFilter& w, const ComplexSpectrogram& Y);

/// Single-frame time-invariant multi-channel Wiener filter toward X_tilde.
ComplexSpectrogram mcwf(const ComplexSpectrogram& Y,
                        const ComplexSpectrogram& X_tilde,
                        double delta_rel = kMcwfLoadingRel);

}  // namespace dpsrefine
