#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "asa/cefr.hpp"

namespace asa {

enum class MarginMode { fixed, data_driven };

std::string margin_mode_name(MarginMode m);
MarginMode margin_mode_from_name(const std::string& name);

struct RunConfig {
  Aspect aspect = Aspect::holistic;
  double lambda = 0.5;  // weight on cross-entropy in the combined objective
  int batch_size = 32;
  double learning_rate = 1e-4;
  double weight_decay = 0.01;
  int patience = 30;
  int max_epochs = 200;
  uint64_t seed = 0;

  MarginMode margin_mode = MarginMode::fixed;
  double margin_scale = 1.0;
  double ema_decay = 0.9;
  std::vector<double> margins = std::vector<double>(7, 0.5);  // fixed / initial values

  int prompt_dim = 768;
  int speech_dim = 768;
  int hidden_dim = 64;
  bool positional_phases = true;

  void validate() const;

  // Flat key = value file; '#' starts a comment.
  static RunConfig from_file(const std::filesystem::path& path);

  // Canonical serialization (sorted keys) used for hashing and round-trips.
  std::string canonical() const;
  uint64_t hash() const;
};

}  // namespace asa
