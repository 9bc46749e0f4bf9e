#include "dpsrefine/noise_model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>

#include "dpsrefine/fcp.hpp"

namespace dpsrefine {

namespace {

using MatC = Eigen::MatrixXcd;
using MapMat = Eigen::Map<MatC>;
using ConstMapMat = Eigen::Map<const MatC>;

}  // namespace

ComplexSpectrogram estimate_noise(const ComplexSpectrogram& Y,
                                  const ComplexSpectrogram& X_tilde,
                                  const FcpParams& fcp) {
  const MultiFrameFilter h = estimate_filter(X_tilde, Y, fcp);
  const ComplexSpectrogram reverb = apply_filter(h, X_tilde);
  ComplexSpectrogram out = Y;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= reverb.data[i];
  return out;
}

NoiseSCMField estimate_scm(const ComplexSpectrogram& N, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw InvalidConfig("estimate_scm: alpha must be in [0, 1)");
  if (!N.all_finite()) throw InvalidInput("estimate_scm: non-finite input");

  const int L = N.frames;
  const int K = N.bins;
  const int C = N.channels;

  double mean_power = 0.0;
  for (const auto& v : N.data) mean_power += std::norm(v);
  if (!N.data.empty()) mean_power /= static_cast<double>(N.data.size());
  const double delta_load = kScmInitLoadRel * mean_power;

  NoiseSCMField phi(L, K, C);
  phi.smoothing = alpha;

  MatC prev(C, C), outer(C, C);
  Eigen::VectorXcd v(C);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      for (int c = 0; c < C; ++c) v(c) = N.at(l, k, c);
      // Exactly Hermitian outer product: fill lower triangle, mirror conj.
      for (int i = 0; i < C; ++i) {
        outer(i, i) = cdouble(std::norm(v(i)), 0.0);
        for (int j = 0; j < i; ++j) {
          outer(i, j) = v(i) * std::conj(v(j));
          outer(j, i) = std::conj(outer(i, j));
        }
      }
      if (l == 0) {
        prev = outer;
        prev.diagonal().array() += delta_load;
      }
      prev = alpha * prev + (1.0 - alpha) * outer;
      MapMat(phi.data.data() + phi.offset(l, k), C, C) = prev;
    }
  }
  return phi;
}

NoiseSCMField invert_scm(const NoiseSCMField& phi, double delta_rel) {
  if (!(delta_rel > 0)) throw InvalidConfig("invert_scm: delta_rel must be > 0");
  const int C = phi.channels;
  NoiseSCMField inv(phi.frames, phi.bins, C);
  inv.smoothing = phi.smoothing;

  MatC A(C, C), R(C, C);
  const MatC eye = MatC::Identity(C, C);
  for (int l = 0; l < phi.frames; ++l) {
    for (int k = 0; k < phi.bins; ++k) {
      A = ConstMapMat(phi.data.data() + phi.offset(l, k), C, C);
      const double tr = A.real().trace();
      const double delta = tr > 0.0 ? delta_rel * tr / C : delta_rel;
      A.diagonal().array() += delta;
      R = A.llt().solve(eye);
      R = 0.5 * (R + R.adjoint()).eval();
      MapMat(inv.data.data() + inv.offset(l, k), C, C) = R;
    }
  }
  return inv;
}

McwfFilter mcwf_design(const ComplexSpectrogram& Y,
                       const ComplexSpectrogram& X_tilde, double delta_rel) {
  if (X_tilde.channels != 1) throw InvalidInput("mcwf: X_tilde must be single-channel");
  if (X_tilde.frames != Y.frames || X_tilde.bins != Y.bins)
    throw InvalidInput("mcwf: shape mismatch");
  if (!Y.all_finite() || !X_tilde.all_finite())
    throw InvalidInput("mcwf: non-finite input");

  const int L = Y.frames;
  const int K = Y.bins;
  const int C = Y.channels;

  McwfFilter flt;
  flt.bins = K;
  flt.channels = C;
  flt.w.assign(static_cast<std::size_t>(K) * C, cdouble{});

  MatC phi_yy(C, C);
  Eigen::VectorXcd phi_yx(C), y(C), w(C);
  for (int k = 0; k < K; ++k) {
    phi_yy.setZero();
    phi_yx.setZero();
    for (int l = 0; l < L; ++l) {
      for (int c = 0; c < C; ++c) y(c) = Y.at(l, k, c);
      phi_yy.noalias() += y * y.adjoint();
      phi_yx.noalias() += y * std::conj(X_tilde.at(l, k, 0));
    }
    phi_yy /= static_cast<double>(L);
    phi_yx /= static_cast<double>(L);

    const double tr = phi_yy.real().trace();
    const double delta = tr > 0.0 ? delta_rel * tr / C : delta_rel;
    phi_yy.diagonal().array() += delta;
    w = phi_yy.llt().solve(phi_yx);
    for (int c = 0; c < C; ++c) flt.at(k, c) = w(c);
  }
  return flt;
}

ComplexSpectrogram mcwf_apply(const McwfFilter& flt, const ComplexSpectrogram& Y) {
  if (flt.bins != Y.bins || flt.channels != Y.channels)
    throw InvalidInput("mcwf_apply: filter does not match Y");
  ComplexSpectrogram out(Y.frames, Y.bins, 1, Y.domain);
  out.copy_meta(Y);
  for (int l = 0; l < Y.frames; ++l)
    for (int k = 0; k < Y.bins; ++k) {
      cdouble s = 0.0;
      for (int c = 0; c < Y.channels; ++c)
        s += std::conj(flt.at(k, c)) * Y.at(l, k, c);
      out.at(l, k, 0) = s;
    }
  return out;
}

ComplexSpectrogram mcwf(const ComplexSpectrogram& Y,
                        const ComplexSpectrogram& X_tilde, double delta_rel) {
  return mcwf_apply(mcwf_design(Y, X_tilde, delta_rel), Y);
}

}  // namespace dpsrefine
