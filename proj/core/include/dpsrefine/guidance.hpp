#pragma once

#include "dpsrefine/diffusion.hpp"
#include "dpsrefine/noise_model.hpp"
#include "dpsrefine/types.hpp"

namespace dpsrefine {

/// How the likelihood gradient is pulled back through the noise predictor.
/// exact_vjp uses the denoiser's own Jacobian adjoint; tweedie_identity
/// drops that term and keeps only the direct 1/sqrt(alpha_bar_t) path,
/// the practical surrogate for models that expose no derivative.
enum class JacobianPolicy { exact_vjp, tweedie_identity };

/// -1/2 sum_{l,k} N^H(l,k) PhiInv(l,k) N(l,k); real and nonpositive,
/// additive constants omitted.
double log_likelihood(const ComplexSpectrogram& N_hat,
                      const NoiseSCMField& phi_inv);

struct ScoreParts {
  ComplexSpectrogram grad;  // gradient w.r.t. the compressive-domain state
  double log_likelihood = 0.0;
};

/// Full likelihood-score chain starting from a precomputed eps_hat:
/// Tweedie denoise, decompress, filter fit (held constant), residual,
/// quadratic form, and the pullback to the compressive-domain state.
ScoreParts likelihood_score_from_eps(const ComplexSpectrogram& X_t_p,
                                     const ComplexSpectrogram& eps_hat,
                                     DenoiserInterface& denoiser,
                                     const ComplexSpectrogram& Y,
                                     const NoiseSCMField& phi_inv,
                                     const FcpParams& fcp, int t,
                                     const DiffusionSchedule& sched,
                                     JacobianPolicy policy);

/// As above but calls the denoiser itself.
ComplexSpectrogram likelihood_score(const ComplexSpectrogram& X_t_p,
                                    DenoiserInterface& denoiser,
                                    const ComplexSpectrogram& Y,
                                    const NoiseSCMField& phi_inv,
                                    const FcpParams& fcp, int t,
                                    const DiffusionSchedule& sched,
                                    JacobianPolicy policy);

/// X + xi * (1 - alpha_t)/sqrt(alpha_t) * G.
ComplexSpectrogram apply_guidance(const ComplexSpectrogram& X_prev_p,
                                  const ComplexSpectrogram& G, int t, double xi,
                                  const DiffusionSchedule& sched);

}  // namespace dpsrefine
