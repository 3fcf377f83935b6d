#include "asa/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace asa {

using nlohmann::json;

EvalReport report_from_confusion(const ConfusionMatrix& confusion, const std::string& task_id,
                                 Aspect aspect) {
  EvalReport rep;
  rep.confusion = confusion;
  rep.task_id = task_id;
  rep.aspect = aspect;

  int64_t correct = 0;
  for (int c = 0; c < kClasses; ++c) {
    for (int p = 0; p < kClasses; ++p) {
      require(confusion[c][p] >= 0, "report: negative confusion count");
      rep.n += confusion[c][p];
    }
    correct += confusion[c][c];
  }
  require(rep.n > 0, "report: empty confusion matrix");
  rep.accuracy = double(correct) / double(rep.n);

  double f1_sum = 0.0;
  for (int c = 0; c < kClasses; ++c) {
    int64_t tp = confusion[c][c], true_count = 0, pred_count = 0;
    for (int p = 0; p < kClasses; ++p) true_count += confusion[c][p];
    for (int t = 0; t < kClasses; ++t) pred_count += confusion[t][c];
    double f1 = 0.0;
    if (tp > 0) {
      const double precision = double(tp) / double(pred_count);
      const double recall = double(tp) / double(true_count);
      f1 = 2.0 * precision * recall / (precision + recall);
    }
    rep.per_class_f1[c] = f1;
    f1_sum += f1;
  }
  rep.macro_f1 = f1_sum / kClasses;
  return rep;
}

double expected_ordinal_error(const EvalReport& report, const CefrScale& scale) {
  require(report.n > 0, "expected_ordinal_error: empty report");
  require(scale.num_levels() == kClasses, "expected_ordinal_error: scale has ",
          scale.num_levels(), " levels, expected ", kClasses);
  double sum = 0.0;
  for (int c = 0; c < kClasses; ++c)
    for (int p = 0; p < kClasses; ++p)
      sum += double(report.confusion[c][p]) * scale.cumulative_distance(c + 1, p + 1);
  return sum / double(report.n);
}

double confusion_mass_at_distance(const EvalReport& report, int min_steps) {
  require(report.n > 0, "confusion_mass: empty report");
  int64_t count = 0;
  for (int c = 0; c < kClasses; ++c)
    for (int p = 0; p < kClasses; ++p)
      if (std::abs(c - p) >= min_steps) count += report.confusion[c][p];
  return double(count) / double(report.n);
}

std::string report_to_json(const EvalReport& report, const CefrScale& scale) {
  json j;
  j["task_id"] = report.task_id;
  j["aspect"] = aspect_name(report.aspect);
  j["n"] = report.n;
  j["accuracy"] = report.accuracy;
  j["macro_f1"] = report.macro_f1;
  json per_class = json::object();
  for (int c = 0; c < kClasses; ++c)
    per_class[scale.level_name(c + 1)] = report.per_class_f1[c];
  j["per_class_f1"] = per_class;
  json rows = json::array();
  for (int c = 0; c < kClasses; ++c) {
    json row = json::array();
    for (int p = 0; p < kClasses; ++p) row.push_back(report.confusion[c][p]);
    rows.push_back(row);
  }
  j["confusion"] = rows;  // rows = true levels, cols = predicted
  j["expected_ordinal_error"] = expected_ordinal_error(report, scale);
  j["levels"] = scale.levels;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(msg("report: malformed JSON: ", e.what()));
  }
  try {
    ConfusionMatrix confusion{};
    const auto& rows = j.at("confusion");
    require(rows.size() == kClasses, "report: confusion must have ", kClasses, " rows");
    for (int c = 0; c < kClasses; ++c) {
      require(rows[c].size() == kClasses, "report: confusion row ", c, " malformed");
      for (int p = 0; p < kClasses; ++p) confusion[c][p] = rows[c][p].get<int64_t>();
    }
    return report_from_confusion(confusion, j.at("task_id").get<std::string>(),
                                 aspect_from_name(j.at("aspect").get<std::string>()));
  } catch (const json::exception& e) {
    throw Error(msg("report: malformed JSON: ", e.what()));
  }
}

void write_confusion_csv(const std::filesystem::path& path, const EvalReport& report,
                         const CefrScale& scale) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write ", path.string());
  out << "true\\pred";
  for (int p = 0; p < kClasses; ++p) out << "," << scale.level_name(p + 1);
  out << "\n";
  for (int c = 0; c < kClasses; ++c) {
    out << scale.level_name(c + 1);
    for (int p = 0; p < kClasses; ++p) out << "," << report.confusion[c][p];
    out << "\n";
  }
  require(out.good(), "write failed: ", path.string());
}

std::string render_confusion(const EvalReport& report, const CefrScale& scale) {
  size_t width = 5;
  for (int c = 0; c < kClasses; ++c)
    width = std::max(width, scale.level_name(c + 1).size() + 1);
  std::ostringstream os;
  os << std::setw(int(width)) << "t\\p";
  for (int p = 0; p < kClasses; ++p)
    os << std::setw(int(width)) << scale.level_name(p + 1);
  os << "\n";
  for (int c = 0; c < kClasses; ++c) {
    os << std::setw(int(width)) << scale.level_name(c + 1);
    for (int p = 0; p < kClasses; ++p) os << std::setw(int(width)) << report.confusion[c][p];
    os << "\n";
  }
  return os.str();
}

}  // namespace asa
