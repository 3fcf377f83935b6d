#include "asa/pitch.hpp"

#include <algorithm>
#include <cmath>

#include "asa/util.hpp"

namespace asa {

namespace {

// Normalized cross-correlation between audio[start .. start+w) and the same
// span shifted by tau, both mean-subtracted. Using the full window (with
// lookahead past the frame when available) keeps the support near w samples
// at every lag, so aperiodic noise stays well below the clarity threshold.
double lag_clarity(std::span<const float> audio, int start, int w, int tau) {
  const int avail = int(audio.size()) - start - tau;
  const int n = std::min(w, avail);
  if (n < 8) return 0.0;
  const float* a = audio.data() + start;
  const float* b = a + tau;
  double ma = 0.0, mb = 0.0;
  for (int i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double r = 0.0, ea = 0.0, eb = 0.0;
  for (int i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    r += da * db;
    ea += da * da;
    eb += db * db;
  }
  const double denom = std::sqrt(ea * eb);
  return denom > 1e-20 ? r / denom : 0.0;
}

}  // namespace

std::vector<PitchFrame> extract_pitch(std::span<const float> audio, int sample_rate,
                                      const PitchConfig& cfg) {
  require(sample_rate >= 8000, "pitch: sample rate ", sample_rate, " below 8000");
  require(!audio.empty(), "pitch: empty audio");
  const int win = int(std::lround(cfg.window_s * sample_rate));
  const int hop = int(std::lround(cfg.hop_s * sample_rate));
  require(win >= 2 && hop >= 1, "pitch: degenerate frame parameters");
  require(int(audio.size()) >= win, "pitch: audio shorter than one window (", audio.size(),
          " < ", win, " samples)");

  const int lag_min = std::max(2, int(std::floor(sample_rate / cfg.max_hz)));
  const int lag_max = int(std::ceil(sample_rate / cfg.min_hz));
  require(lag_min < lag_max && lag_max < int(audio.size()), "pitch: search range too wide");

  const int n_frames = (int(audio.size()) - win) / hop + 1;
  std::vector<PitchFrame> frames(n_frames);

#pragma omp parallel for schedule(static)
  for (int f = 0; f < n_frames; ++f) {
    const int start = f * hop;
    PitchFrame out;
    out.time_s = (start + 0.5 * win) / sample_rate;

    double sq = 0.0;
    for (int i = 0; i < win; ++i) sq += double(audio[start + i]) * audio[start + i];
    out.rms = std::sqrt(sq / win);

    if (sq < 1e-12) {  // silence
      frames[f] = out;
      continue;
    }

    const int lo = lag_min - 1, hi = lag_max + 1;
    std::vector<double> c(hi - lo + 1);
    for (int tau = lo; tau <= hi; ++tau) c[tau - lo] = lag_clarity(audio, start, win, tau);

    double c_max = -2.0;
    for (int tau = lag_min; tau <= lag_max; ++tau) c_max = std::max(c_max, c[tau - lo]);
    if (c_max < cfg.clarity_threshold) {
      frames[f] = out;
      continue;
    }

    // Smallest local maximum within 95% of the global peak: a periodic
    // signal repeats its correlation peak at lag multiples, so this picks
    // the fundamental rather than an octave-down alias.
    int best = -1;
    for (int tau = lag_min; tau <= lag_max; ++tau) {
      if (c[tau - lo] >= c[tau - lo - 1] && c[tau - lo] >= c[tau - lo + 1] &&
          c[tau - lo] >= 0.95 * c_max) {
        best = tau;
        break;
      }
    }
    if (best < 0) {
      frames[f] = out;
      continue;
    }

    const double cm = c[best - lo - 1], c0 = c[best - lo], cp = c[best - lo + 1];
    double delta = 0.0;
    const double denom = cm - 2.0 * c0 + cp;
    if (std::abs(denom) > 1e-12) delta = std::clamp(0.5 * (cm - cp) / denom, -0.5, 0.5);

    out.clarity = c0;
    out.voiced = out.clarity >= cfg.clarity_threshold;
    if (out.voiced) out.pitch_hz = sample_rate / (best + delta);
    frames[f] = out;
  }
  return frames;
}

}  // namespace asa
