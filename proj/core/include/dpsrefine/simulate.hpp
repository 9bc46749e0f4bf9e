#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dpsrefine/noise_model.hpp"
#include "dpsrefine/types.hpp"

namespace dpsrefine {

enum class NoiseKind { white, diffuse };

struct MixtureSpec {
  int channels = 4;
  int n_taps = 4;                       // taps of the true transfer filter
  NoiseKind noise = NoiseKind::white;
  double snr_db = 0.0;                  // +infinity disables the noise
  std::uint64_t seed = 0;

  void validate() const {
    if (channels < 1) throw InvalidConfig("MixtureSpec: channels must be >= 1");
    if (n_taps < 1) throw InvalidConfig("MixtureSpec: n_taps must be >= 1");
    if (std::isnan(snr_db)) throw InvalidConfig("MixtureSpec: snr_db must not be NaN");
  }
};

struct Mixture {
  ComplexSpectrogram Y;       // C-channel mixture, exactly H*X + N
  MultiFrameFilter H_true;    // the filter that generated it
  ComplexSpectrogram N_true;  // the noise that was added
  NoiseSCMField Phi_true;     // per-bin covariance the noise was drawn from
  double realized_snr_db = 0.0;
};

/// Synthesizes a convolutive multi-channel mixture in the STFT domain with
/// fully known ground truth. Filter taps decay geometrically by 0.6 per tap;
/// the noise is scaled so the reference-channel full-band SNR matches
/// spec.snr_db exactly.
Mixture gen_mixture(const ComplexSpectrogram& X_clean, const MixtureSpec& spec);

inline constexpr double kSiSdrCapDb = 120.0;

/// Scale-invariant SDR in dB: project est onto ref, compare target and
/// residual energies. Capped at +/-120 dB.
double si_sdr(const std::vector<double>& est, const std::vector<double>& ref);

}  // namespace dpsrefine
