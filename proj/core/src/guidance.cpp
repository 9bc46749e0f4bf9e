#include "dpsrefine/guidance.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "dpsrefine/fcp.hpp"
#include "dpsrefine/spectral.hpp"

namespace dpsrefine {

namespace {

using ConstMapMat = Eigen::Map<const Eigen::MatrixXcd>;

void check_scm_args(const ComplexSpectrogram& N_hat, const NoiseSCMField& phi_inv) {
  if (N_hat.frames != phi_inv.frames || N_hat.bins != phi_inv.bins ||
      N_hat.channels != phi_inv.channels)
    throw InvalidInput("log_likelihood: residual and SCM field shapes differ");
  const int C = phi_inv.channels;
  double scale = 0.0;
  for (const auto& v : phi_inv.data) scale = std::max(scale, std::abs(v));
  const double tol = 1e-9 * (scale + 1.0);
  for (int l = 0; l < phi_inv.frames; ++l) {
    for (int k = 0; k < phi_inv.bins; ++k) {
      for (int i = 0; i < C; ++i)
        for (int j = 0; j <= i; ++j)
          if (std::abs(phi_inv.at(l, k, i, j) - std::conj(phi_inv.at(l, k, j, i))) > tol)
            throw InvalidInput("log_likelihood: phi_inv is not Hermitian");
    }
  }
}

}  // namespace

double log_likelihood(const ComplexSpectrogram& N_hat,
                      const NoiseSCMField& phi_inv) {
  check_scm_args(N_hat, phi_inv);
  const int C = N_hat.channels;
  Eigen::VectorXcd n(C);
  double quad = 0.0;
  for (int l = 0; l < N_hat.frames; ++l) {
    for (int k = 0; k < N_hat.bins; ++k) {
      for (int c = 0; c < C; ++c) n(c) = N_hat.at(l, k, c);
      const ConstMapMat P(phi_inv.data.data() + phi_inv.offset(l, k), C, C);
      quad += n.dot(P * n).real();  // n^H P n
    }
  }
  // Each term is a PSD quadratic form; clamp rounding residue so the result
  // is exactly <= 0.
  return -0.5 * std::max(quad, 0.0);
}

ScoreParts likelihood_score_from_eps(const ComplexSpectrogram& X_t_p,
                                     const ComplexSpectrogram& eps_hat,
                                     DenoiserInterface& denoiser,
                                     const ComplexSpectrogram& Y,
                                     const NoiseSCMField& phi_inv,
                                     const FcpParams& fcp, int t,
                                     const DiffusionSchedule& sched,
                                     JacobianPolicy policy) {
  if (X_t_p.domain != Domain::compressive)
    throw DomainMismatch("likelihood_score: state must be compressive");
  if (X_t_p.channels != 1)
    throw InvalidInput("likelihood_score: state must be single-channel");

  const ComplexSpectrogram x0p = tweedie_denoise(X_t_p, eps_hat, t, sched);
  const ComplexSpectrogram x0 = decompress(x0p);
  const MultiFrameFilter h = estimate_filter(x0, Y, fcp);
  const ComplexSpectrogram reverb = apply_filter(h, x0);

  ComplexSpectrogram n_hat = Y;
  for (std::size_t i = 0; i < n_hat.data.size(); ++i)
    n_hat.data[i] -= reverb.data[i];

  const double ll = log_likelihood(n_hat, phi_inv);

  // d(ll)/dN on (real, imag) pairs is -PhiInv N; N = Y - H*X0 flips the sign
  // once more through the filter adjoint.
  const int C = n_hat.channels;
  ComplexSpectrogram pn = n_hat;
  {
    Eigen::VectorXcd n(C), z(C);
    for (int l = 0; l < n_hat.frames; ++l) {
      for (int k = 0; k < n_hat.bins; ++k) {
        for (int c = 0; c < C; ++c) n(c) = n_hat.at(l, k, c);
        const ConstMapMat P(phi_inv.data.data() + phi_inv.offset(l, k), C, C);
        z = P * n;
        for (int c = 0; c < C; ++c) pn.at(l, k, c) = z(c);
      }
    }
  }
  const ComplexSpectrogram cot_x0 = apply_filter_adjoint(h, pn);
  ComplexSpectrogram cot_x0p = decompress_vjp(x0p, cot_x0);

  const double ab = sched.alpha_bar_at(t);
  const double inv_sab = 1.0 / std::sqrt(ab);
  const double som = std::sqrt(1.0 - ab);

  ScoreParts parts;
  parts.log_likelihood = ll;
  parts.grad = cot_x0p;
  for (auto& v : parts.grad.data) v *= inv_sab;
  if (policy == JacobianPolicy::exact_vjp) {
    if (!denoiser.has_exact_vjp())
      throw InvalidConfig("likelihood_score: exact_vjp policy requires a "
                          "denoiser with an exact vjp");
    const ComplexSpectrogram jt = denoiser.vjp(X_t_p, t, cot_x0p);
    const double c = som * inv_sab;
    for (std::size_t i = 0; i < parts.grad.data.size(); ++i)
      parts.grad.data[i] -= c * jt.data[i];
  }
  parts.grad.domain = Domain::compressive;
  return parts;
}

ComplexSpectrogram likelihood_score(const ComplexSpectrogram& X_t_p,
                                    DenoiserInterface& denoiser,
                                    const ComplexSpectrogram& Y,
                                    const NoiseSCMField& phi_inv,
                                    const FcpParams& fcp, int t,
                                    const DiffusionSchedule& sched,
                                    JacobianPolicy policy) {
  const ComplexSpectrogram eps_hat = denoiser.predict_noise(X_t_p, t);
  return likelihood_score_from_eps(X_t_p, eps_hat, denoiser, Y, phi_inv, fcp, t,
                                   sched, policy)
      .grad;
}

ComplexSpectrogram apply_guidance(const ComplexSpectrogram& X_prev_p,
                                  const ComplexSpectrogram& G, int t, double xi,
                                  const DiffusionSchedule& sched) {
  if (!X_prev_p.same_shape(G)) throw InvalidInput("apply_guidance: shape mismatch");
  if (xi < 0) throw InvalidConfig("apply_guidance: xi must be >= 0");
  const double a = sched.alpha_at(t);
  const double c = xi * (1.0 - a) / std::sqrt(a);
  ComplexSpectrogram out = X_prev_p;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += c * G.data[i];
  return out;
}

}  // namespace dpsrefine
