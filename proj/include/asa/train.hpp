#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "asa/config.hpp"
#include "asa/manifest.hpp"
#include "asa/metrics.hpp"
#include "asa/objective.hpp"

namespace asa {

// Strict-improvement early stopping: stops after `patience` consecutive
// non-improving metric evaluations.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {
    require(patience >= 1, "early stopping: patience must be >= 1");
  }

  // Returns true when the metric strictly improved on the best so far.
  bool update(double metric) {
    ++evals_;
    if (metric > best_) {
      best_ = metric;
      since_improvement_ = 0;
      return true;
    }
    ++since_improvement_;
    return false;
  }

  bool should_stop() const { return since_improvement_ >= patience_; }
  int evals() const { return evals_; }
  double best() const { return best_; }

 private:
  int patience_;
  int evals_ = 0;
  int since_improvement_ = 0;
  double best_ = -std::numeric_limits<double>::infinity();
};

struct TrainResult {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_valid_macro_f1 = 0.0;
  std::filesystem::path checkpoint_path;       // best validation macro-F1
  std::filesystem::path last_checkpoint_path;  // state after the final epoch
  std::filesystem::path log_path;
  bool aborted = false;  // non-finite loss; best checkpoint retained
  std::string abort_reason;
};

// Full training loop: seeded shuffled mini-batches, combined objective,
// AdamW updates, optional per-epoch data-driven margin refresh, per-epoch
// validation macro-F1 with early stopping, best-checkpoint saving.
// Deterministic for a fixed config: reruns produce byte-identical artifacts
// (checkpoint.best, train_log.csv, margins.csv).
TrainResult train(const RunConfig& cfg, const CefrScale& scale,
                  const std::vector<Instance>& train_set,
                  const std::vector<Instance>& valid_set,
                  const std::filesystem::path& out_dir);

}  // namespace asa
