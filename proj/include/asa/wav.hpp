#pragma once

#include <filesystem>
#include <vector>

namespace asa {

struct AudioBuffer {
  int sample_rate = 0;
  std::vector<float> samples;  // mono, [-1, 1]

  double duration_s() const {
    return sample_rate ? double(samples.size()) / sample_rate : 0.0;
  }
};

// Mono 16-bit PCM WAV, 8-48 kHz. Anything else is rejected.
AudioBuffer read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

}  // namespace asa
