#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "asa/cefr.hpp"
#include "asa/tensor_io.hpp"

namespace asa {

// One manifest record: tensor file references plus digitized labels.
struct InstanceRef {
  std::string id;
  std::string task_id;
  std::filesystem::path prompt_emb;
  std::filesystem::path speech_frames;
  std::filesystem::path delivery;
  std::filesystem::path language;
  std::map<Aspect, int> labels;  // aspect -> class index
};

// One fully loaded spoken response.
struct Instance {
  std::string id;
  std::string task_id;
  FloatMatrix prompt;    // 1 x prompt_dim
  FloatMatrix speech;    // t x speech_dim, t >= 0
  FloatMatrix delivery;  // m x 16
  FloatMatrix language;  // m x 263
  std::map<Aspect, int> labels;

  // Empty word sequence; encoders substitute their learned null row.
  bool degenerate() const { return delivery.rows == 0; }
  int label(Aspect a) const;
};

// JSON Lines manifest: fields id, task_id, prompt_emb, speech_frames,
// delivery, language, scores (object keyed by aspect, raw half-point
// values). Tensor paths are resolved relative to the manifest directory;
// referenced files must exist. Record order is preserved.
std::vector<InstanceRef> load_manifest(const std::filesystem::path& path, const CefrScale& scale);

// Loads the four tensors behind a descriptor and checks the invariants
// shared by all instances (matching delivery/language row counts, fixed
// feature widths, single prompt row).
Instance load_instance(const InstanceRef& ref);

std::vector<Instance> load_instances(const std::filesystem::path& manifest_path,
                                     const CefrScale& scale);

}  // namespace asa
