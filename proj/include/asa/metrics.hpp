#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "asa/cefr.hpp"
#include "asa/model.hpp"

namespace asa {

using ConfusionMatrix = std::array<std::array<int64_t, kClasses>, kClasses>;  // [true][pred]

struct EvalReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::array<double, kClasses> per_class_f1{};
  ConfusionMatrix confusion{};
  int64_t n = 0;
  std::string task_id;
  Aspect aspect = Aspect::holistic;
};

// Metrics from a filled confusion matrix. Per-class F1 is 0 for classes
// absent from both truth and predictions; macro-F1 averages all classes so
// models that neglect minority classes are penalized.
EvalReport report_from_confusion(const ConfusionMatrix& confusion, const std::string& task_id,
                                 Aspect aspect);

// Argmax evaluation over a labeled dataset.
template <typename T>
EvalReport evaluate(AspectModel<T>& model, const std::vector<Instance>& instances) {
  require(!instances.empty(), "evaluate: empty dataset");
  const int n = int(instances.size());
  std::vector<int> truth(n), pred(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    truth[i] = instances[i].label(model.aspect);
    pred[i] = argmax_class(model.logits(instances[i]));
  }
  ConfusionMatrix confusion{};
  for (int i = 0; i < n; ++i) confusion[truth[i] - 1][pred[i] - 1] += 1;
  return report_from_confusion(confusion, instances.front().task_id, model.aspect);
}

// Mean cumulative-margin distance between true and predicted classes.
double expected_ordinal_error(const EvalReport& report, const CefrScale& scale);

// Fraction of instances with |true - pred| >= k class steps.
double confusion_mass_at_distance(const EvalReport& report, int min_steps);

std::string report_to_json(const EvalReport& report, const CefrScale& scale);
EvalReport report_from_json(const std::string& text);
void write_confusion_csv(const std::filesystem::path& path, const EvalReport& report,
                         const CefrScale& scale);
std::string render_confusion(const EvalReport& report, const CefrScale& scale);

}  // namespace asa
