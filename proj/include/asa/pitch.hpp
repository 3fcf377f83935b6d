#pragma once

#include <span>
#include <vector>

namespace asa {

struct PitchConfig {
  double window_s = 0.025;
  double hop_s = 0.010;
  double min_hz = 50.0;
  double max_hz = 400.0;
  double clarity_threshold = 0.3;
};

struct PitchFrame {
  double time_s = 0.0;   // window center
  double pitch_hz = 0.0; // 0 when unvoiced
  bool voiced = false;
  double clarity = 0.0;  // normalized autocorrelation at the chosen lag
  double rms = 0.0;      // frame RMS energy of the raw waveform
};

// Frame-level pitch tracking: 25 ms windows at a 10 ms hop, normalized
// autocorrelation peak search restricted to min_hz..max_hz with parabolic
// interpolation. Frames whose peak clarity falls below the threshold are
// marked unvoiced. Audio shorter than one window is an error.
std::vector<PitchFrame> extract_pitch(std::span<const float> audio, int sample_rate,
                                      const PitchConfig& cfg = {});

}  // namespace asa
