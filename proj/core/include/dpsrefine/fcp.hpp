#pragma once

#include <vector>

#include "dpsrefine/types.hpp"

namespace dpsrefine {

/// Relative Tikhonov ridge added to the weighted normal matrix:
/// delta = kRidgeRel * trace(A^H W A) / n_taps.
inline constexpr double kRidgeRel = 1e-8;

/// Per-(frame, bin) weighted-least-squares weights. degenerate is set (and
/// the weights are uniform 1.0) when the target is identically zero.
struct FcpWeights {
  int frames = 0;
  int bins = 0;
  std::vector<double> lambda;  // frame-major, bin-minor
  bool degenerate = false;

  double at(int l, int k) const {
    return lambda[static_cast<std::size_t>(l) * bins + k];
  }
};

/// lambda(m,k) = mean_c |Y^c(m,k)|^2 + eps * max_{m,k} mean_c |Y^c(m,k)|^2.
/// Keeps the filter estimate from overfitting high-energy bins.
FcpWeights fcp_weights(const ComplexSpectrogram& Y, double eps);

/// Weighted least-squares estimate of the per-bin multi-frame filter mapping
/// X onto each channel of Y (causal convolution across frames, zero-padded
/// history). Solved per (channel, bin) via the ridge-regularized normal
/// equations; never fails on rank-deficient input.
MultiFrameFilter estimate_filter(const ComplexSpectrogram& X,
                                 const ComplexSpectrogram& Y,
                                 const FcpParams& params);

/// Causal per-bin convolution across frames:
/// out^c(m,k) = sum_n H^c(n,k) X(m-n,k), with X(m,k) = 0 for m < 0.
ComplexSpectrogram apply_filter(const MultiFrameFilter& H,
                                const ComplexSpectrogram& X);

/// Exact adjoint of apply_filter under the real inner product on
/// (real, imag) pairs: out(m,k) = sum_c sum_n conj(H^c(n,k)) R^c(m+n,k).
ComplexSpectrogram apply_filter_adjoint(const MultiFrameFilter& H,
                                        const ComplexSpectrogram& R);

/// Single-tap per-bin complex gain fitting X0 to X_ref, then applied to X0.
ComplexSpectrogram align(const ComplexSpectrogram& X0,
                         const ComplexSpectrogram& X_ref, double eps);

}  // namespace dpsrefine
