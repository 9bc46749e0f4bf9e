#pragma once

#include <vector>

#include "dpsrefine/types.hpp"

namespace dpsrefine {

/// Magnitudes below this floor are clamped inside compress/decompress_vjp so
/// the half-power maps stay defined at zero; the phase of a floored zero is 0.
inline constexpr double kMagnitudeFloor = 1e-10;

/// Periodic square-root Hann window of length n.
std::vector<double> make_sqrt_hann(int n);

/// Centered one-sided STFT of a multi-channel waveform. All channels must
/// share the same length. Frames are centered by zero-padding fft_size/2
/// samples on each side; the input length is recorded so istft restores it.
ComplexSpectrogram stft(const std::vector<std::vector<double>>& wave,
                        const StftParams& params);
ComplexSpectrogram stft(const std::vector<double>& mono_wave,
                        const StftParams& params);

/// Overlap-add inverse with sqrt-Hann synthesis window and per-sample
/// window-power normalization. Restores the length recorded at analysis
/// time ((L-1)*hop when none was recorded).
std::vector<std::vector<double>> istft(const ComplexSpectrogram& spec);
std::vector<double> istft_mono(const ComplexSpectrogram& spec);

/// x -> |x|^0.5 * exp(j*angle(x)), the diffusion prior's native domain.
ComplexSpectrogram compress(const ComplexSpectrogram& spec);

/// x' -> |x'|^2 * exp(j*angle(x')) == x' * |x'|, inverse of compress away
/// from the magnitude floor.
ComplexSpectrogram decompress(const ComplexSpectrogram& spec);

/// Adjoint Jacobian action of decompress on (real, imag) pairs. At
/// x' = a + jb with r = |x'| the Jacobian is r*I + (1/r)*[a;b][a;b]^T,
/// symmetric, so the VJP applies the same matrix to the cotangent.
ComplexSpectrogram decompress_vjp(const ComplexSpectrogram& x_prime,
                                  const ComplexSpectrogram& cotangent);

}  // namespace dpsrefine
