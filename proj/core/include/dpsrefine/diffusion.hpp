#pragma once

#include <limits>
#include <vector>

#include "dpsrefine/types.hpp"

namespace dpsrefine {

/// DDPM variance schedule, 1-based in t with alpha_bar(0) := 1 so that
/// sigma2(1) == 0.
struct DiffusionSchedule {
  int T = 0;
  std::vector<double> beta;       // beta[t-1]
  std::vector<double> alpha;      // 1 - beta_t
  std::vector<double> alpha_bar;  // prod_{s<=t} alpha_s
  std::vector<double> sigma2;     // (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t

  double beta_at(int t) const { return beta[check(t)]; }
  double alpha_at(int t) const { return alpha[check(t)]; }
  double alpha_bar_at(int t) const { return alpha_bar[check(t)]; }
  double sigma2_at(int t) const { return sigma2[check(t)]; }

  int check(int t) const {
    if (t < 1 || t > T) throw InvalidInput("DiffusionSchedule: step out of range");
    return t - 1;
  }
};

/// Linear beta schedule from beta_1 to beta_T over T steps.
DiffusionSchedule make_schedule(int T, double beta_1, double beta_T);

/// Coefficient applied to the fresh noise Z in a reverse step. sigma2 adds
/// sigma_t^2 * Z, the variance-coefficient form the sampler defaults to;
/// sigma adds sigma_t * Z, the standard DDPM kernel. The sigma2 form
/// underdisperses, which acts as mild annealing during guided refinement but
/// cannot reproduce a prior's spread in unguided sampling.
enum class NoiseCoef { sigma2, sigma };

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) * noise. The noise is
/// supplied by the caller, drawn with unit-variance real and imaginary parts.
ComplexSpectrogram forward_diffuse(const ComplexSpectrogram& x0p, int t,
                                   const ComplexSpectrogram& noise,
                                   const DiffusionSchedule& sched);

/// One-step MMSE denoising:
/// x0_hat = (x_t - sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_bar_t).
ComplexSpectrogram tweedie_denoise(const ComplexSpectrogram& x_t_p,
                                   const ComplexSpectrogram& eps_hat, int t,
                                   const DiffusionSchedule& sched);

/// Reverse kernel mean plus noise:
/// x_{t-1} = (x_t - (1-alpha_t)/sqrt(1-alpha_bar_t) eps_hat)/sqrt(alpha_t) + coef_t * z.
ComplexSpectrogram reverse_step(const ComplexSpectrogram& x_t_p,
                                const ComplexSpectrogram& eps_hat, int t,
                                const ComplexSpectrogram& z,
                                const DiffusionSchedule& sched,
                                NoiseCoef coef = NoiseCoef::sigma2);

/// Noise predictor abstraction: the sampler only needs eps_hat(x_t, t) and,
/// for exact likelihood gradients, the adjoint action of its Jacobian.
class DenoiserInterface {
 public:
  virtual ~DenoiserInterface() = default;

  virtual ComplexSpectrogram predict_noise(const ComplexSpectrogram& x_t_p,
                                           int t) = 0;

  virtual bool has_exact_vjp() const { return false; }

  /// Adjoint Jacobian action of predict_noise in (real, imag) pairs; must be
  /// linear in the cotangent. Default: not available.
  virtual ComplexSpectrogram vjp(const ComplexSpectrogram& x_t_p, int t,
                                 const ComplexSpectrogram& cotangent);
};

/// Closed-form noise predictor for a Gaussian prior with componentwise mean
/// mu and per-bin variance s2 (real and imaginary parts independent). Serves
/// as the verification oracle for the full sampler. s2 may be +infinity
/// (flat prior: eps_hat == 0) and the Jacobian is an exact per-component
/// scalar gain.
class GaussianAnalyticDenoiser : public DenoiserInterface {
 public:
  GaussianAnalyticDenoiser(ComplexSpectrogram mu, double s2,
                           DiffusionSchedule sched);
  GaussianAnalyticDenoiser(ComplexSpectrogram mu, std::vector<double> s2_per_bin,
                           DiffusionSchedule sched);

  ComplexSpectrogram predict_noise(const ComplexSpectrogram& x_t_p,
                                   int t) override;
  bool has_exact_vjp() const override { return true; }
  ComplexSpectrogram vjp(const ComplexSpectrogram& x_t_p, int t,
                         const ComplexSpectrogram& cotangent) override;

  const ComplexSpectrogram& mu() const { return mu_; }

 private:
  double s2_at(std::size_t i) const { return s2_.size() == 1 ? s2_[0] : s2_[i]; }
  void check_shape(const ComplexSpectrogram& x) const;

  ComplexSpectrogram mu_;
  std::vector<double> s2_;  // single value or one per element of mu
  DiffusionSchedule sched_;
};

/// eps_hat == 0 regardless of input; the null model used for protocol tests.
class ZeroDenoiser : public DenoiserInterface {
 public:
  ComplexSpectrogram predict_noise(const ComplexSpectrogram& x_t_p, int t) override;
  bool has_exact_vjp() const override { return true; }
  ComplexSpectrogram vjp(const ComplexSpectrogram& x_t_p, int t,
                         const ComplexSpectrogram& cotangent) override;
};

}  // namespace dpsrefine
