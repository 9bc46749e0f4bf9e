// Command-line front end: refine | mcwf | simulate | metrics.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "dpsrefine/denoiser_wire.hpp"
#include "dpsrefine/diffusion.hpp"
#include "dpsrefine/fcp.hpp"
#include "dpsrefine/noise_model.hpp"
#include "dpsrefine/sampler.hpp"
#include "dpsrefine/simulate.hpp"
#include "dpsrefine/spectral.hpp"
#include "dpsrefine/wav.hpp"

using namespace dpsrefine;

namespace {

struct RefineOpts {
  std::string mixture, enhanced, out;
  double xi = 0.4;
  int t_start = 300;
  double scm_alpha = 0.95;
  int nh = 13;
  double fcp_eps = 1e-3;
  std::uint64_t seed = 0;
  std::string denoiser = "analytic:degenerate";
  std::string jacobian = "auto";
  std::string noise_coef = "sigma2";
  std::string trace;
  bool normalize = true;
};

struct McwfOpts {
  std::string mixture, enhanced, out;
};

struct SimulateOpts {
  std::string clean, out_prefix;
  int channels = 4;
  int taps = 4;
  std::string noise = "white";
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

struct MetricsOpts {
  std::string est, ref;
};

double max_abs(const AudioFile& a) {
  double m = 0.0;
  for (const auto& ch : a.channels)
    for (double v : ch) m = std::max(m, std::abs(v));
  return m;
}

void require_compatible(const AudioFile& a, const AudioFile& b, int hop) {
  if (a.sample_rate != b.sample_rate)
    throw InvalidInput("sample rates differ (" + std::to_string(a.sample_rate) +
                       " vs " + std::to_string(b.sample_rate) + ")");
  if (std::llabs(a.n_samples() - b.n_samples()) > hop)
    throw InvalidInput("durations differ by more than one hop");
}

void truncate_to(AudioFile& a, std::int64_t n) {
  for (auto& ch : a.channels) ch.resize(static_cast<std::size_t>(n));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::unique_ptr<DenoiserInterface> make_denoiser(const std::string& spec,
                                                 const ComplexSpectrogram& x_tilde,
                                                 const StftParams& stft_params,
                                                 const DiffusionSchedule& sched,
                                                 bool* is_external) {
  *is_external = false;
  if (spec.rfind("external:", 0) == 0) {
    *is_external = true;
    return ExternalDenoiser::from_endpoint(spec.substr(9));
  }
  if (spec.rfind("analytic:", 0) != 0)
    throw InvalidConfig("unknown denoiser spec '" + spec +
                        "' (expected analytic:... or external:...)");
  const auto parts = split(spec.substr(9), ':');
  if (parts.empty()) throw InvalidConfig("empty analytic denoiser spec");

  if (parts[0] == "degenerate") {
    // Prior pinned at the enhanced estimate.
    const double s2 = parts.size() > 1 ? std::stod(parts[1]) : 1e-6;
    return std::make_unique<GaussianAnalyticDenoiser>(compress(x_tilde), s2, sched);
  }
  if (parts[0] == "flat") {
    ComplexSpectrogram mu(x_tilde.frames, x_tilde.bins, 1, Domain::compressive);
    mu.copy_meta(x_tilde);
    return std::make_unique<GaussianAnalyticDenoiser>(
        mu, std::numeric_limits<double>::infinity(), sched);
  }
  if (parts[0] == "wav") {
    if (parts.size() < 2) throw InvalidConfig("analytic:wav needs a path");
    const AudioFile f = read_wav(parts[1]);
    if (f.n_channels() != 1) throw InvalidInput(parts[1] + ": expected mono");
    ComplexSpectrogram mu = compress(stft(f.channels[0], stft_params));
    if (mu.frames != x_tilde.frames || mu.bins != x_tilde.bins)
      throw InvalidInput("denoiser mean shape does not match the enhanced input");
    const double s2 = parts.size() > 2 ? std::stod(parts[2]) : 0.1;
    return std::make_unique<GaussianAnalyticDenoiser>(std::move(mu), s2, sched);
  }
  throw InvalidConfig("unknown analytic denoiser variant '" + parts[0] + "'");
}

int run_refine(const RefineOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();

  AudioFile mixture = read_wav(o.mixture);
  AudioFile enhanced = read_wav(o.enhanced);
  if (enhanced.n_channels() != 1)
    throw InvalidInput(o.enhanced + ": enhanced estimate must be mono");
  if (mixture.sample_rate != 16000)
    throw InvalidInput("refine expects 16 kHz input (the prior's rate), got " +
                       std::to_string(mixture.sample_rate) + " Hz");

  StftParams stft_params;  // 512/128
  require_compatible(mixture, enhanced, stft_params.hop_size);
  const std::int64_t n = std::min(mixture.n_samples(), enhanced.n_samples());
  truncate_to(mixture, n);
  truncate_to(enhanced, n);

  double gain = 1.0;
  if (o.normalize) {
    const double peak = std::max(max_abs(mixture), max_abs(enhanced));
    if (peak > 0.0) gain = peak;
    for (auto& ch : mixture.channels)
      for (auto& v : ch) v /= gain;
    for (auto& ch : enhanced.channels)
      for (auto& v : ch) v /= gain;
  }

  const ComplexSpectrogram Y = stft(mixture.channels, stft_params);
  const ComplexSpectrogram X_tilde = stft(enhanced.channels[0], stft_params);

  RefineConfig cfg;
  cfg.t_start = o.t_start;
  cfg.xi = o.xi;
  cfg.scm_alpha = o.scm_alpha;
  cfg.fcp.n_taps = o.nh;
  cfg.fcp.eps = o.fcp_eps;
  cfg.align_eps = o.fcp_eps;
  cfg.seed = o.seed;
  cfg.stft = stft_params;
  if (o.noise_coef == "sigma2")
    cfg.noise_coef = NoiseCoef::sigma2;
  else if (o.noise_coef == "sigma")
    cfg.noise_coef = NoiseCoef::sigma;
  else
    throw InvalidConfig("--noise-coef must be sigma2 or sigma");

  const DiffusionSchedule sched = make_schedule(1000, 1e-4, 0.02);

  bool is_external = false;
  auto denoiser = make_denoiser(o.denoiser, X_tilde, stft_params, sched, &is_external);
  if (o.jacobian == "auto")
    cfg.jacobian = is_external ? JacobianPolicy::tweedie_identity
                               : JacobianPolicy::exact_vjp;
  else if (o.jacobian == "exact")
    cfg.jacobian = JacobianPolicy::exact_vjp;
  else if (o.jacobian == "tweedie-identity")
    cfg.jacobian = JacobianPolicy::tweedie_identity;
  else
    throw InvalidConfig("--jacobian must be exact or tweedie-identity");

  const ComplexSpectrogram noise_est = estimate_noise(Y, X_tilde, cfg.fcp);
  const NoiseSCMField phi_inv =
      invert_scm(estimate_scm(noise_est, cfg.scm_alpha), kScmLoadingRel);

  ComplexSpectrogram refined;
  if (!o.trace.empty()) {
    const RefineResult res =
        refine_trace(Y, X_tilde, phi_inv, *denoiser, cfg, sched);
    refined = res.X0;
    std::ofstream tf(o.trace);
    if (!tf) throw std::runtime_error("cannot create trace file " + o.trace);
    for (const auto& rec : res.trace)
      tf << "t=" << rec.t << " log_likelihood=" << rec.log_likelihood
         << " grad_norm=" << rec.grad_norm << " state_norm=" << rec.state_norm
         << "\n";
  } else {
    refined = refine(Y, X_tilde, phi_inv, *denoiser, cfg, sched);
  }

  AudioFile out;
  out.sample_rate = mixture.sample_rate;
  out.channels = {istft_mono(refined)};
  for (auto& v : out.channels[0]) v *= gain;
  write_wav(o.out, out);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("refine: t_start=%d xi=%.3g steps=%d wall=%.2fs out=%s\n",
              cfg.t_start, cfg.xi, cfg.t_start, wall, o.out.c_str());
  return 0;
}

int run_mcwf(const McwfOpts& o) {
  AudioFile mixture = read_wav(o.mixture);
  AudioFile enhanced = read_wav(o.enhanced);
  if (enhanced.n_channels() != 1)
    throw InvalidInput(o.enhanced + ": enhanced estimate must be mono");

  StftParams p;
  p.fft_size = 256;
  p.hop_size = 64;
  require_compatible(mixture, enhanced, p.hop_size);
  const std::int64_t n = std::min(mixture.n_samples(), enhanced.n_samples());
  truncate_to(mixture, n);
  truncate_to(enhanced, n);

  const ComplexSpectrogram Y = stft(mixture.channels, p);
  const ComplexSpectrogram X_tilde = stft(enhanced.channels[0], p);
  const ComplexSpectrogram est = mcwf(Y, X_tilde);

  AudioFile out;
  out.sample_rate = mixture.sample_rate;
  out.channels = {istft_mono(est)};
  write_wav(o.out, out);
  return 0;
}

int run_simulate(const SimulateOpts& o) {
  const AudioFile clean = read_wav(o.clean);
  if (clean.n_channels() != 1) throw InvalidInput(o.clean + ": expected mono");

  StftParams p;  // 512/128
  const ComplexSpectrogram X = stft(clean.channels[0], p);

  MixtureSpec spec;
  spec.channels = o.channels;
  spec.n_taps = o.taps;
  spec.snr_db = o.snr_db;
  spec.seed = o.seed;
  if (o.noise == "white")
    spec.noise = NoiseKind::white;
  else if (o.noise == "diffuse")
    spec.noise = NoiseKind::diffuse;
  else
    throw InvalidConfig("--noise must be white or diffuse");

  const Mixture mix = gen_mixture(X, spec);

  AudioFile mixture, noise;
  mixture.sample_rate = clean.sample_rate;
  noise.sample_rate = clean.sample_rate;
  mixture.channels = istft(mix.Y);
  noise.channels = istft(mix.N_true);
  write_wav(o.out_prefix + "mixture.wav", mixture);
  write_wav(o.out_prefix + "noise.wav", noise);

  std::ofstream meta(o.out_prefix + "meta.txt");
  if (!meta) throw std::runtime_error("cannot create " + o.out_prefix + "meta.txt");
  meta << "seed=" << spec.seed << "\n"
       << "snr_db=" << spec.snr_db << "\n"
       << "n_taps=" << spec.n_taps << "\n"
       << "channels=" << spec.channels << "\n"
       << "noise=" << o.noise << "\n"
       << "realized_snr_db=" << mix.realized_snr_db << "\n";
  std::printf("simulate: wrote %smixture.wav (%d ch), %snoise.wav, %smeta.txt\n",
              o.out_prefix.c_str(), spec.channels, o.out_prefix.c_str(),
              o.out_prefix.c_str());
  return 0;
}

int run_metrics(const MetricsOpts& o) {
  AudioFile est = read_wav(o.est);
  AudioFile ref = read_wav(o.ref);
  require_compatible(est, ref, 128);
  const std::int64_t n = std::min(est.n_samples(), ref.n_samples());
  truncate_to(est, n);
  truncate_to(ref, n);
  const double v = si_sdr(est.channels[0], ref.channels[0]);
  std::printf("si_sdr_db=%.6f\n", v);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-channel speech-enhancement refinement via guided "
               "diffusion sampling"};
  app.require_subcommand(1);

  RefineOpts ro;
  auto* refine_cmd = app.add_subcommand(
      "refine", "Refine a mono enhanced estimate against its multi-channel mixture");
  refine_cmd->add_option("mixture", ro.mixture, "C-channel mixture wav")->required();
  refine_cmd->add_option("enhanced", ro.enhanced, "mono enhanced-estimate wav")->required();
  refine_cmd->add_option("out", ro.out, "output wav")->required();
  refine_cmd->add_option("--xi", ro.xi, "likelihood guidance scale");
  refine_cmd->add_option("--t-start", ro.t_start, "warm-start diffusion step");
  refine_cmd->add_option("--scm-alpha", ro.scm_alpha, "noise SCM smoothing");
  refine_cmd->add_option("--nh", ro.nh, "filter taps");
  refine_cmd->add_option("--fcp-eps", ro.fcp_eps, "weighting floor coefficient");
  refine_cmd->add_option("--seed", ro.seed, "sampling seed");
  refine_cmd->add_option("--denoiser", ro.denoiser,
                         "analytic:degenerate[:s2] | analytic:flat | "
                         "analytic:wav:<path>[:s2] | external:<cmd-or-host:port>");
  refine_cmd->add_option("--jacobian", ro.jacobian, "exact | tweedie-identity");
  refine_cmd->add_option("--noise-coef", ro.noise_coef, "sigma2 | sigma");
  refine_cmd->add_option("--trace", ro.trace, "write per-step records here");
  refine_cmd->add_flag("--normalize,!--no-normalize", ro.normalize,
                       "rescale inputs to unit peak before refinement");

  McwfOpts mo;
  auto* mcwf_cmd = app.add_subcommand(
      "mcwf", "Time-invariant multi-channel Wiener filter baseline");
  mcwf_cmd->add_option("mixture", mo.mixture)->required();
  mcwf_cmd->add_option("enhanced", mo.enhanced)->required();
  mcwf_cmd->add_option("out", mo.out)->required();

  SimulateOpts so;
  auto* sim_cmd = app.add_subcommand(
      "simulate", "Synthesize a convolutive mixture with known ground truth");
  sim_cmd->add_option("clean", so.clean, "mono clean wav")->required();
  sim_cmd->add_option("--out", so.out_prefix, "output prefix")->required();
  sim_cmd->add_option("--channels", so.channels);
  sim_cmd->add_option("--taps", so.taps);
  sim_cmd->add_option("--noise", so.noise, "white | diffuse");
  sim_cmd->add_option("--snr", so.snr_db, "SNR in dB (inf disables noise)");
  sim_cmd->add_option("--seed", so.seed);

  MetricsOpts eo;
  auto* met_cmd = app.add_subcommand("metrics", "Print SI-SDR of est against ref");
  met_cmd->add_option("est", eo.est)->required();
  met_cmd->add_option("ref", eo.ref)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (refine_cmd->parsed()) return run_refine(ro);
    if (mcwf_cmd->parsed()) return run_mcwf(mo);
    if (sim_cmd->parsed()) return run_simulate(so);
    if (met_cmd->parsed()) return run_metrics(eo);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
