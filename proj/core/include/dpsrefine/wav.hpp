#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpsrefine/types.hpp"

namespace dpsrefine {

struct AudioFile {
  int sample_rate = 16000;
  std::vector<std::vector<double>> channels;  // samples in [-1, 1]

  std::int64_t n_samples() const {
    return channels.empty() ? 0 : static_cast<std::int64_t>(channels[0].size());
  }
  int n_channels() const { return static_cast<int>(channels.size()); }
};

/// Reads RIFF/WAVE, 16-bit integer or 32-bit float PCM.
AudioFile read_wav(const std::string& path);

/// Writes 32-bit float PCM.
void write_wav(const std::string& path, const AudioFile& audio);

}  // namespace dpsrefine
