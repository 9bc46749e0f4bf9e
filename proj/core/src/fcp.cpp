#include "dpsrefine/fcp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace dpsrefine {

FcpWeights fcp_weights(const ComplexSpectrogram& Y, double eps) {
  if (Y.channels < 1) throw InvalidInput("fcp_weights: need at least 1 channel");
  if (!Y.all_finite()) throw InvalidInput("fcp_weights: non-finite input");
  if (!(eps > 0)) throw InvalidConfig("fcp_weights: eps must be > 0");

  FcpWeights w;
  w.frames = Y.frames;
  w.bins = Y.bins;
  w.lambda.assign(static_cast<std::size_t>(Y.frames) * Y.bins, 0.0);

  double max_power = 0.0;
  for (int l = 0; l < Y.frames; ++l) {
    for (int k = 0; k < Y.bins; ++k) {
      double p = 0.0;
      for (int c = 0; c < Y.channels; ++c) p += std::norm(Y.at(l, k, c));
      p /= Y.channels;
      w.lambda[static_cast<std::size_t>(l) * Y.bins + k] = p;
      max_power = std::max(max_power, p);
    }
  }

  if (max_power == 0.0) {
    w.degenerate = true;
    std::fill(w.lambda.begin(), w.lambda.end(), 1.0);
    return w;
  }
  const double floor = eps * max_power;
  for (auto& v : w.lambda) v += floor;
  return w;
}

MultiFrameFilter estimate_filter(const ComplexSpectrogram& X,
                                 const ComplexSpectrogram& Y,
                                 const FcpParams& params) {
  params.validate();
  if (X.channels != 1) throw InvalidInput("estimate_filter: X must be single-channel");
  if (X.frames != Y.frames || X.bins != Y.bins)
    throw InvalidInput("estimate_filter: X and Y must share frames and bins");
  if (!X.all_finite() || !Y.all_finite())
    throw InvalidInput("estimate_filter: non-finite input");

  const int L = X.frames;
  const int K = X.bins;
  const int C = Y.channels;
  const int N = params.n_taps;

  const FcpWeights lam = fcp_weights(Y, params.eps);

  MultiFrameFilter H(N, K, C);
  Eigen::MatrixXcd M(N, N);
  Eigen::VectorXcd rhs(N), h(N);
  std::vector<cdouble> x(L);
  std::vector<double> wgt(L);

  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < L; ++m) {
      x[m] = X.at(m, k, 0);
      wgt[m] = 1.0 / lam.at(m, k);
    }

    // Normal matrix M(i,j) = sum_m w_m conj(x[m-i]) x[m-j]; Hermitian, and
    // independent of the target channel.
    for (int i = 0; i < N; ++i) {
      for (int j = i; j < N; ++j) {
        cdouble s = 0.0;
        for (int m = j; m < L; ++m) s += wgt[m] * std::conj(x[m - i]) * x[m - j];
        M(i, j) = s;
        if (j != i) M(j, i) = std::conj(s);
      }
    }

    double tr = 0.0;
    for (int i = 0; i < N; ++i) tr += M(i, i).real();
    if (!(tr > 0.0)) {
      // X silent at this bin: every solution fits equally; return zero taps.
      for (int c = 0; c < C; ++c)
        for (int n = 0; n < N; ++n) H.at(n, k, c) = 0.0;
      continue;
    }
    const double delta = kRidgeRel * tr / N;
    for (int i = 0; i < N; ++i) M(i, i) += delta;

    Eigen::LLT<Eigen::MatrixXcd> llt(M);
    const bool llt_ok = (llt.info() == Eigen::Success);
    Eigen::LDLT<Eigen::MatrixXcd> ldlt;
    if (!llt_ok) ldlt.compute(M);

    for (int c = 0; c < C; ++c) {
      for (int i = 0; i < N; ++i) {
        cdouble s = 0.0;
        for (int m = i; m < L; ++m) s += wgt[m] * std::conj(x[m - i]) * Y.at(m, k, c);
        rhs(i) = s;
      }
      if (llt_ok)
        h = llt.solve(rhs);
      else
        h = ldlt.solve(rhs);
      for (int n = 0; n < N; ++n) H.at(n, k, c) = h(n);
    }
  }
  return H;
}

ComplexSpectrogram apply_filter(const MultiFrameFilter& H,
                                const ComplexSpectrogram& X) {
  if (X.channels != 1) throw InvalidInput("apply_filter: X must be single-channel");
  if (H.bins != X.bins) throw InvalidInput("apply_filter: bin count mismatch");

  const int L = X.frames;
  const int K = X.bins;
  const int C = H.channels;
  const int N = H.taps;

  ComplexSpectrogram out(L, K, C, X.domain);
  out.copy_meta(X);
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < C; ++c) {
      for (int m = 0; m < L; ++m) {
        cdouble s = 0.0;
        const int n_max = std::min(N - 1, m);
        for (int n = 0; n <= n_max; ++n) s += H.at(n, k, c) * X.at(m - n, k, 0);
        out.at(m, k, c) = s;
      }
    }
  }
  return out;
}

ComplexSpectrogram apply_filter_adjoint(const MultiFrameFilter& H,
                                        const ComplexSpectrogram& R) {
  if (H.bins != R.bins) throw InvalidInput("apply_filter_adjoint: bin count mismatch");
  if (H.channels != R.channels)
    throw InvalidInput("apply_filter_adjoint: channel count mismatch");

  const int L = R.frames;
  const int K = R.bins;
  const int C = R.channels;
  const int N = H.taps;

  ComplexSpectrogram out(L, K, 1, R.domain);
  out.copy_meta(R);
  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < L; ++m) {
      cdouble s = 0.0;
      const int n_max = std::min(N - 1, L - 1 - m);
      for (int c = 0; c < C; ++c)
        for (int n = 0; n <= n_max; ++n)
          s += std::conj(H.at(n, k, c)) * R.at(m + n, k, c);
      out.at(m, k, 0) = s;
    }
  }
  return out;
}

ComplexSpectrogram align(const ComplexSpectrogram& X0,
                         const ComplexSpectrogram& X_ref, double eps) {
  if (!X0.same_shape(X_ref)) throw InvalidInput("align: shape mismatch");
  FcpParams p;
  p.n_taps = 1;
  p.eps = eps;
  const MultiFrameFilter h = estimate_filter(X0, X_ref, p);
  return apply_filter(h, X0);
}

}  // namespace dpsrefine
