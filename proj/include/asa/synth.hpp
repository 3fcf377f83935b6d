#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "asa/manifest.hpp"

namespace asa {

// Class geometry for the synthetic ordinal corpus: eight class centroids per
// modality placed along a random unit direction, with injectable adjacent
// gaps (deliberately non-uniform) and isotropic gaussian noise. Labels and
// feature geometry stay consistent, so a nearest-centroid classifier is
// perfect on noiseless data and the injected gap pattern is recoverable.
struct SynthSpec {
  std::vector<int> train_per_class = std::vector<int>(8, 24);
  std::vector<int> valid_per_class = std::vector<int>(8, 8);
  std::vector<int> test_per_class = std::vector<int>(8, 8);
  std::vector<double> gaps = {0.92, 0.38, 0.70, 0.50, 0.80, 0.30, 0.60};  // 7 adjacent gaps
  double noise = 0.10;
  int prompt_dim = 8;
  int speech_dim = 12;
  int frames_min = 2, frames_max = 5;   // speech rows t
  int words_min = 1, words_max = 4;     // delivery/language rows m
  uint64_t seed = 1;
  std::string task_id = "S01";

  void validate() const;
};

struct SynthResult {
  std::filesystem::path train_manifest;
  std::filesystem::path valid_manifest;
  std::filesystem::path test_manifest;
  int instances = 0;
};

// Deterministic for a given spec: regenerating into a fresh directory
// produces byte-identical files.
SynthResult generate_synthetic_corpus(const SynthSpec& spec,
                                      const std::filesystem::path& out_dir);

// Class centroid of one modality (1-based class index).
FloatMatrix synth_centroid(const SynthSpec& spec, const std::string& modality, int cls,
                           int dim);

}  // namespace asa
