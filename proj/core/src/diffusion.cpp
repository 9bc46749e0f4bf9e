#include "dpsrefine/diffusion.hpp"

#include <cmath>
#include <utility>

namespace dpsrefine {

DiffusionSchedule make_schedule(int T, double beta_1, double beta_T) {
  if (T < 2) throw InvalidConfig("make_schedule: T must be >= 2");
  if (!(0.0 < beta_1 && beta_1 < beta_T && beta_T < 1.0))
    throw InvalidConfig("make_schedule: need 0 < beta_1 < beta_T < 1");

  DiffusionSchedule s;
  s.T = T;
  s.beta.resize(T);
  s.alpha.resize(T);
  s.alpha_bar.resize(T);
  s.sigma2.resize(T);

  double bar = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double b = beta_1 + (t - 1) * (beta_T - beta_1) / (T - 1);
    const double prev_bar = bar;  // alpha_bar_{t-1}, with alpha_bar_0 := 1
    s.beta[t - 1] = b;
    s.alpha[t - 1] = 1.0 - b;
    bar *= s.alpha[t - 1];
    s.alpha_bar[t - 1] = bar;
    s.sigma2[t - 1] = t == 1 ? 0.0 : (1.0 - prev_bar) / (1.0 - bar) * b;
  }
  return s;
}

namespace {

void check_pair(const ComplexSpectrogram& a, const ComplexSpectrogram& b,
                const char* what) {
  if (!a.same_shape(b)) throw InvalidInput(std::string(what) + ": shape mismatch");
}

}  // namespace

ComplexSpectrogram forward_diffuse(const ComplexSpectrogram& x0p, int t,
                                   const ComplexSpectrogram& noise,
                                   const DiffusionSchedule& sched) {
  check_pair(x0p, noise, "forward_diffuse");
  const double ab = sched.alpha_bar_at(t);
  const double c0 = std::sqrt(ab);
  const double cn = std::sqrt(1.0 - ab);
  ComplexSpectrogram out = x0p;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = c0 * x0p.data[i] + cn * noise.data[i];
  return out;
}

ComplexSpectrogram tweedie_denoise(const ComplexSpectrogram& x_t_p,
                                   const ComplexSpectrogram& eps_hat, int t,
                                   const DiffusionSchedule& sched) {
  check_pair(x_t_p, eps_hat, "tweedie_denoise");
  const double ab = sched.alpha_bar_at(t);
  const double inv = 1.0 / std::sqrt(ab);
  const double cn = std::sqrt(1.0 - ab);
  ComplexSpectrogram out = x_t_p;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = inv * (x_t_p.data[i] - cn * eps_hat.data[i]);
  return out;
}

ComplexSpectrogram reverse_step(const ComplexSpectrogram& x_t_p,
                                const ComplexSpectrogram& eps_hat, int t,
                                const ComplexSpectrogram& z,
                                const DiffusionSchedule& sched, NoiseCoef coef) {
  check_pair(x_t_p, eps_hat, "reverse_step");
  check_pair(x_t_p, z, "reverse_step");
  const double a = sched.alpha_at(t);
  const double ab = sched.alpha_bar_at(t);
  const double c1 = 1.0 / std::sqrt(a);
  const double c2 = (1.0 - a) / std::sqrt(1.0 - ab);
  const double s2 = sched.sigma2_at(t);
  const double cz = coef == NoiseCoef::sigma2 ? s2 : std::sqrt(s2);

  ComplexSpectrogram out = x_t_p;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = c1 * (x_t_p.data[i] - c2 * eps_hat.data[i]);
    if (cz > 0.0) out.data[i] += cz * z.data[i];
  }
  return out;
}

ComplexSpectrogram DenoiserInterface::vjp(const ComplexSpectrogram&, int,
                                          const ComplexSpectrogram&) {
  throw InvalidConfig("denoiser does not expose an exact vjp; use the "
                      "tweedie_identity Jacobian policy");
}

GaussianAnalyticDenoiser::GaussianAnalyticDenoiser(ComplexSpectrogram mu,
                                                   double s2,
                                                   DiffusionSchedule sched)
    : mu_(std::move(mu)), s2_{s2}, sched_(std::move(sched)) {
  if (!(s2 > 0)) throw InvalidConfig("GaussianAnalyticDenoiser: s2 must be > 0");
}

GaussianAnalyticDenoiser::GaussianAnalyticDenoiser(ComplexSpectrogram mu,
                                                   std::vector<double> s2_per_bin,
                                                   DiffusionSchedule sched)
    : mu_(std::move(mu)), s2_(std::move(s2_per_bin)), sched_(std::move(sched)) {
  if (s2_.size() != mu_.data.size())
    throw InvalidConfig("GaussianAnalyticDenoiser: s2 size must match mu");
  for (double v : s2_)
    if (!(v > 0)) throw InvalidConfig("GaussianAnalyticDenoiser: s2 must be > 0");
}

void GaussianAnalyticDenoiser::check_shape(const ComplexSpectrogram& x) const {
  if (!x.same_shape(mu_))
    throw InvalidInput("GaussianAnalyticDenoiser: input shape does not match mu");
}

ComplexSpectrogram GaussianAnalyticDenoiser::predict_noise(
    const ComplexSpectrogram& x_t_p, int t) {
  check_shape(x_t_p);
  const double ab = sched_.alpha_bar_at(t);
  const double sab = std::sqrt(ab);
  const double om = 1.0 - ab;
  const double som = std::sqrt(om);

  ComplexSpectrogram out = x_t_p;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double s2 = s2_at(i);
    if (std::isinf(s2)) {  // flat prior: E[x0|x_t] = x_t/sqrt(ab), eps_hat = 0
      out.data[i] = 0.0;
      continue;
    }
    const double denom = ab * s2 + om;
    const cdouble post_mean = (s2 * sab * x_t_p.data[i] + om * mu_.data[i]) / denom;
    out.data[i] = (x_t_p.data[i] - sab * post_mean) / som;
  }
  return out;
}

ComplexSpectrogram GaussianAnalyticDenoiser::vjp(const ComplexSpectrogram& x_t_p,
                                                 int t,
                                                 const ComplexSpectrogram& cot) {
  check_shape(x_t_p);
  check_pair(x_t_p, cot, "GaussianAnalyticDenoiser::vjp");
  const double ab = sched_.alpha_bar_at(t);
  const double om = 1.0 - ab;

  ComplexSpectrogram out = cot;
  out.copy_meta(x_t_p);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double s2 = s2_at(i);
    const double gain = std::isinf(s2) ? 0.0 : std::sqrt(om) / (ab * s2 + om);
    out.data[i] = gain * cot.data[i];
  }
  return out;
}

ComplexSpectrogram ZeroDenoiser::predict_noise(const ComplexSpectrogram& x_t_p,
                                               int) {
  ComplexSpectrogram out = x_t_p;
  for (auto& v : out.data) v = 0.0;
  return out;
}

ComplexSpectrogram ZeroDenoiser::vjp(const ComplexSpectrogram& x_t_p, int,
                                     const ComplexSpectrogram& cot) {
  ComplexSpectrogram out = cot;
  out.copy_meta(x_t_p);
  for (auto& v : out.data) v = 0.0;
  return out;
}

}  // namespace dpsrefine
