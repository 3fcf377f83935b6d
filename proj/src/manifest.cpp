#include "asa/manifest.hpp"

#include <fstream>

#include <json.hpp>

namespace asa {

using nlohmann::json;

int Instance::label(Aspect a) const {
  auto it = labels.find(a);
  require(it != labels.end(), "instance ", id, ": no label for aspect ", aspect_name(a));
  return it->second;
}

std::vector<InstanceRef> load_manifest(const std::filesystem::path& path,
                                       const CefrScale& scale) {
  std::ifstream in(path);
  require(in.good(), "manifest not found: ", path.string());
  const auto base = path.parent_path();

  std::vector<InstanceRef> refs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(msg("manifest ", path.string(), ":", lineno, ": malformed record: ", e.what()));
    }
    try {
      InstanceRef ref;
      ref.id = rec.at("id").get<std::string>();
      ref.task_id = rec.at("task_id").get<std::string>();
      ref.prompt_emb = base / rec.at("prompt_emb").get<std::string>();
      ref.speech_frames = base / rec.at("speech_frames").get<std::string>();
      ref.delivery = base / rec.at("delivery").get<std::string>();
      ref.language = base / rec.at("language").get<std::string>();
      const auto& scores = rec.at("scores");
      require(scores.is_object() && !scores.empty(), "scores must be a non-empty object");
      for (const auto& [key, val] : scores.items()) {
        Aspect a = aspect_from_name(key);
        ref.labels[a] = scale.digitize(val.get<double>());
      }
      for (const auto& p :
           {ref.prompt_emb, ref.speech_frames, ref.delivery, ref.language})
        require(std::filesystem::exists(p), "missing referenced file: ", p.string());
      refs.push_back(std::move(ref));
    } catch (const json::exception& e) {
      throw Error(msg("manifest ", path.string(), ":", lineno, ": malformed record: ", e.what()));
    } catch (const Error& e) {
      throw Error(msg("manifest ", path.string(), ":", lineno, ": ", e.what()));
    }
  }
  return refs;
}

Instance load_instance(const InstanceRef& ref) {
  Instance inst;
  inst.id = ref.id;
  inst.task_id = ref.task_id;
  inst.labels = ref.labels;
  inst.prompt = read_tnsr(ref.prompt_emb);
  inst.speech = read_tnsr(ref.speech_frames);
  inst.delivery = read_tnsr(ref.delivery);
  inst.language = read_tnsr(ref.language);
  require(inst.prompt.rows == 1, "instance ", ref.id, ": prompt embedding must be one row, got ",
          inst.prompt.rows);
  require(inst.delivery.rows == inst.language.rows, "instance ", ref.id,
          ": delivery rows (", inst.delivery.rows, ") != language rows (", inst.language.rows,
          ")");
  require(inst.delivery.cols == 16, "instance ", ref.id, ": delivery width ", inst.delivery.cols,
          " != 16");
  require(inst.language.cols == 263, "instance ", ref.id, ": language width ",
          inst.language.cols, " != 263");
  return inst;
}

std::vector<Instance> load_instances(const std::filesystem::path& manifest_path,
                                     const CefrScale& scale) {
  auto refs = load_manifest(manifest_path, scale);
  std::vector<Instance> out;
  out.reserve(refs.size());
  for (const auto& ref : refs) out.push_back(load_instance(ref));
  return out;
}

}  // namespace asa
