#include "dpsrefine/sampler.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dpsrefine/fcp.hpp"
#include "dpsrefine/rng.hpp"
#include "dpsrefine/spectral.hpp"

namespace dpsrefine {

namespace {

using sampler_streams::kInit;
using sampler_streams::kStepBase;

double frob_norm(const ComplexSpectrogram& s) {
  double acc = 0.0;
  for (const auto& v : s.data) acc += std::norm(v);
  return std::sqrt(acc);
}

ComplexSpectrogram refine_impl(const ComplexSpectrogram& Y,
                               const ComplexSpectrogram& X_tilde,
                               const NoiseSCMField& phi_inv,
                               DenoiserInterface& denoiser,
                               const RefineConfig& cfg,
                               const DiffusionSchedule& sched,
                               std::vector<StepRecord>* trace) {
  cfg.validate(sched);
  if (X_tilde.channels != 1)
    throw InvalidInput("refine: X_tilde must be single-channel");
  if (X_tilde.frames != Y.frames || X_tilde.bins != Y.bins)
    throw InvalidInput("refine: Y and X_tilde must share frames and bins");
  if (Y.channels != phi_inv.channels || Y.frames != phi_inv.frames ||
      Y.bins != phi_inv.bins)
    throw InvalidInput("refine: phi_inv shape does not match Y");
  if (X_tilde.domain != Domain::stft || Y.domain != Domain::stft)
    throw InvalidInput("refine: inputs must be STFT-domain spectrograms");

  const int L = X_tilde.frames;
  const int K = X_tilde.bins;

  const ComplexSpectrogram x_tilde_p = compress(X_tilde);
  ComplexSpectrogram eps = complex_unit_noise(L, K, 1, cfg.seed, kInit);
  ComplexSpectrogram x = forward_diffuse(x_tilde_p, cfg.t_start, eps, sched);

  if (trace) trace->reserve(cfg.t_start);

  for (int t = cfg.t_start; t >= 1; --t) {
    if (!x.all_finite())
      throw std::runtime_error("refine: non-finite state at step t=" +
                               std::to_string(t));
    const ComplexSpectrogram eps_hat = denoiser.predict_noise(x, t);
    const ComplexSpectrogram z =
        complex_unit_noise(L, K, 1, cfg.seed, kStepBase + static_cast<std::uint64_t>(t));
    ComplexSpectrogram x_prev = reverse_step(x, eps_hat, t, z, sched, cfg.noise_coef);

    if (cfg.xi > 0.0 || trace) {
      const ScoreParts parts = likelihood_score_from_eps(
          x, eps_hat, denoiser, Y, phi_inv, cfg.fcp, t, sched, cfg.jacobian);
      if (cfg.xi > 0.0)
        x_prev = apply_guidance(x_prev, parts.grad, t, cfg.xi, sched);
      if (trace)
        trace->push_back({t, parts.log_likelihood, frob_norm(parts.grad),
                          frob_norm(x)});
    }
    x = std::move(x_prev);
  }

  const ComplexSpectrogram x0 = decompress(x);
  return align(x0, X_tilde, cfg.align_eps);
}

}  // namespace

ComplexSpectrogram refine(const ComplexSpectrogram& Y,
                          const ComplexSpectrogram& X_tilde,
                          const NoiseSCMField& phi_inv,
                          DenoiserInterface& denoiser, const RefineConfig& cfg,
                          const DiffusionSchedule& sched) {
  return refine_impl(Y, X_tilde, phi_inv, denoiser, cfg, sched, nullptr);
}

RefineResult refine_trace(const ComplexSpectrogram& Y,
                          const ComplexSpectrogram& X_tilde,
                          const NoiseSCMField& phi_inv,
                          DenoiserInterface& denoiser, const RefineConfig& cfg,
                          const DiffusionSchedule& sched) {
  RefineResult result;
  result.X0 = refine_impl(Y, X_tilde, phi_inv, denoiser, cfg, sched, &result.trace);
  return result;
}

}  // namespace dpsrefine
