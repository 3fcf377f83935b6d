#pragma once

#include <array>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "asa/config.hpp"
#include "asa/manifest.hpp"
#include "asa/nn.hpp"

namespace asa {

inline constexpr int kClasses = 8;

template <typename T>
TensorPtr<T> to_tensor(const FloatMatrix& m, bool requires_grad = false) {
  auto t = make_tensor<T>(m.rows, m.cols, requires_grad);
  for (size_t i = 0; i < m.numel(); ++i) t->data[i] = T(m.data[i]);
  return t;
}

template <typename T>
FloatMatrix to_matrix(const Tensor<T>& t) {
  FloatMatrix m(t.rows, t.cols);
  for (size_t i = 0; i < t.numel(); ++i) m.data[i] = float(t.data[i]);
  return m;
}

// One aspect-specific encoder: input projection to the hidden width, a
// single-head encoder layer, final normalization, attention pooling. An
// empty input sequence is replaced by the learned null row.
template <typename T>
struct SequenceEncoder {
  std::string name;
  int input_dim = 0;
  int hidden_dim = 0;

  nn::Linear<T> in_proj;
  nn::EncoderLayer<T> layer;
  nn::RmsNorm<T> final_norm;
  nn::AttentionPool<T> pool;
  Parameter<T> null_row;  // 1 x input_dim

  SequenceEncoder() = default;
  SequenceEncoder(const std::string& n, int in_dim, int hidden, bool rotary)
      : name(n),
        input_dim(in_dim),
        hidden_dim(hidden),
        in_proj(n + ".in_proj", in_dim, hidden),
        layer(n + ".layer", hidden, rotary),
        final_norm(n + ".final_norm", hidden),
        pool(n + ".pool", hidden),
        null_row(n + ".null_row", 1, in_dim) {}

  void init(std::mt19937_64& rng) {
    in_proj.init(rng);
    layer.init(rng);
    nn::fill(final_norm.gain, T(1));
    pool.init(rng);
    nn::init_uniform(null_row, input_dim, rng);
  }

  // rows: m x input_dim with m >= 0; mask empty means all rows valid.
  TensorPtr<T> encode(Tape<T>& tape, const FloatMatrix& rows,
                      const std::vector<uint8_t>& mask = {}) {
    require(rows.rows == 0 || rows.cols == input_dim, name, ": input width ", rows.cols,
            " != ", input_dim);
    TensorPtr<T> x;
    std::vector<uint8_t> valid = mask;
    if (rows.rows == 0) {
      x = null_row.value;  // learned stand-in row for degenerate sequences
      valid = {1};
    } else {
      x = to_tensor<T>(rows);
      if (valid.empty()) valid.assign(size_t(rows.rows), 1);
      require(int(valid.size()) == rows.rows, name, ": mask length mismatch");
    }
    auto h = in_proj.forward(tape, x);
    h = layer.forward(tape, h, valid);
    h = final_norm.forward(tape, h);
    return pool.forward(tape, h, valid);
  }

  void collect(std::vector<Parameter<T>*>& out) {
    in_proj.collect(out);
    layer.collect(out);
    final_norm.collect(out);
    pool.collect(out);
    out.push_back(&null_row);
  }
};

struct ModelDims {
  int prompt_dim = 768;
  int speech_dim = 768;
  int hidden_dim = 64;
};

// The multi-aspect grader: content / delivery / language-use encoders whose
// pooled vectors are concatenated, linearly projected, and mapped to the
// eight class logits. One model is trained per scoring aspect.
template <typename T>
struct AspectModel {
  Aspect aspect = Aspect::holistic;
  ModelDims dims;
  bool positional_phases = true;

  SequenceEncoder<T> content;    // rows are [prompt ; speech frame]
  SequenceEncoder<T> delivery;   // rows are 16-wide delivery vectors
  SequenceEncoder<T> language;   // rows are 263-wide linguistic vectors
  nn::Linear<T> projection;      // 3*hidden -> hidden
  nn::Linear<T> head;            // hidden -> 8

  AspectModel() = default;
  AspectModel(Aspect a, const ModelDims& d, bool rotary)
      : aspect(a),
        dims(d),
        positional_phases(rotary),
        content("content", d.prompt_dim + d.speech_dim, d.hidden_dim, rotary),
        delivery("delivery", 16, d.hidden_dim, rotary),
        language("language", kLanguageDimCheck(), d.hidden_dim, rotary),
        projection("projection", 3 * d.hidden_dim, d.hidden_dim),
        head("head", d.hidden_dim, kClasses) {}

  static int kLanguageDimCheck() { return 263; }

  static AspectModel make(const RunConfig& cfg) {
    AspectModel m(cfg.aspect, ModelDims{cfg.prompt_dim, cfg.speech_dim, cfg.hidden_dim},
                  cfg.positional_phases);
    m.init(cfg.seed);
    return m;
  }

  void init(uint64_t seed) {
    std::mt19937_64 rng(hash_combine(seed, fnv1a64("model-init")));
    content.init(rng);
    delivery.init(rng);
    language.init(rng);
    projection.init(rng);
    head.init(rng);
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    content.collect(out);
    delivery.collect(out);
    language.collect(out);
    projection.collect(out);
    head.collect(out);
    return out;
  }

  // Content rows: the prompt embedding replicated and concatenated onto
  // every speech frame.
  FloatMatrix content_rows(const Instance& inst) const {
    require(inst.prompt.cols == dims.prompt_dim, "model: content: prompt width ",
            inst.prompt.cols, " != configured ", dims.prompt_dim);
    require(inst.speech.rows == 0 || inst.speech.cols == dims.speech_dim,
            "model: content: speech width ", inst.speech.cols, " != configured ",
            dims.speech_dim);
    FloatMatrix rows(inst.speech.rows, dims.prompt_dim + dims.speech_dim);
    for (int i = 0; i < inst.speech.rows; ++i) {
      for (int j = 0; j < dims.prompt_dim; ++j) rows.at(i, j) = inst.prompt.at(0, j);
      for (int j = 0; j < dims.speech_dim; ++j)
        rows.at(i, dims.prompt_dim + j) = inst.speech.at(i, j);
    }
    return rows;
  }

  TensorPtr<T> encode_content(Tape<T>& tape, const Instance& inst) {
    return content.encode(tape, content_rows(inst));
  }

  // Logits for one instance (1 x 8).
  TensorPtr<T> predict(Tape<T>& tape, const Instance& inst) {
    auto vc = encode_content(tape, inst);
    auto vd = delivery.encode(tape, inst.delivery);
    auto vl = language.encode(tape, inst.language);
    auto fused = ops::concat_cols(tape, ops::concat_cols(tape, vc, vd), vl);
    return head.forward(tape, projection.forward(tape, fused));
  }

  // Forward-only logits.
  std::array<double, kClasses> logits(const Instance& inst) {
    Tape<T> tape;
    auto z = predict(tape, inst);
    std::array<double, kClasses> out;
    for (int j = 0; j < kClasses; ++j) out[j] = double(z->data[j]);
    return out;
  }
};

// Argmax with ties broken toward the lower class; returns a 1-based class.
template <typename T, size_t N>
int argmax_class(const std::array<T, N>& logits) {
  int best = 0;
  for (int j = 1; j < int(N); ++j)
    if (logits[j] > logits[best]) best = j;
  return best + 1;
}

// ---------------------------------------------------------------------------
// Checkpoints: text header plus named parameter blocks in the portable
// tensor format (float32 regardless of the in-memory precision).

template <typename T>
void save_checkpoint(const std::filesystem::path& path, AspectModel<T>& model,
                     const std::vector<double>& margins, uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "checkpoint: cannot write ", path.string());
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof hash_hex, "%016" PRIx64, config_hash);
  out << "ASACKPT v1\n";
  out << "config_hash " << hash_hex << "\n";
  out << "aspect " << aspect_name(model.aspect) << "\n";
  out << "dims " << model.dims.prompt_dim << " " << model.dims.speech_dim << " "
      << model.dims.hidden_dim << " " << kClasses << "\n";
  out << "rope " << (model.positional_phases ? 1 : 0) << "\n";
  out << "margins";
  char buf[64];
  for (double m : margins) {
    std::snprintf(buf, sizeof buf, " %.17g", m);
    out << buf;
  }
  out << "\n";
  auto params = model.parameters();
  out << "params " << params.size() << "\n";
  for (Parameter<T>* p : params) {
    out << p->name << "\n";
    write_tnsr_stream(out, to_matrix(*p->value));
  }
  require(out.good(), "checkpoint: write failed: ", path.string());
}

struct CheckpointInfo {
  Aspect aspect = Aspect::holistic;
  ModelDims dims;
  bool positional_phases = true;
  std::vector<double> margins;
  uint64_t config_hash = 0;
};

template <typename T>
CheckpointInfo load_checkpoint(const std::filesystem::path& path, AspectModel<T>& model_out) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "checkpoint: cannot open ", path.string());
  std::string line;
  require(bool(std::getline(in, line)) && line == "ASACKPT v1", "checkpoint ", path.string(),
          ": bad magic");

  CheckpointInfo info;
  int classes = 0;
  size_t n_params = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "config_hash") {
      std::string hex;
      ls >> hex;
      info.config_hash = std::stoull(hex, nullptr, 16);
    } else if (key == "aspect") {
      std::string name;
      ls >> name;
      info.aspect = aspect_from_name(name);
    } else if (key == "dims") {
      ls >> info.dims.prompt_dim >> info.dims.speech_dim >> info.dims.hidden_dim >> classes;
      require(!ls.fail() && classes == kClasses, "checkpoint ", path.string(), ": bad dims line");
    } else if (key == "rope") {
      int v = 0;
      ls >> v;
      info.positional_phases = v != 0;
    } else if (key == "margins") {
      double m;
      while (ls >> m) info.margins.push_back(m);
    } else if (key == "params") {
      ls >> n_params;
      break;
    } else {
      throw Error(msg("checkpoint ", path.string(), ": unexpected header line '", line, "'"));
    }
  }
  require(n_params > 0, "checkpoint ", path.string(), ": missing params section");

  model_out = AspectModel<T>(info.aspect, info.dims, info.positional_phases);
  auto params = model_out.parameters();
  require(params.size() == n_params, "checkpoint ", path.string(), ": expected ", params.size(),
          " parameters, file has ", n_params);
  for (Parameter<T>* p : params) {
    require(bool(std::getline(in, line)), "checkpoint ", path.string(),
            ": truncated before parameter '", p->name, "'");
    require(line == p->name, "checkpoint ", path.string(), ": expected parameter '", p->name,
            "', found '", line, "'");
    FloatMatrix m = read_tnsr_stream(in, p->name);
    require(m.rows == p->value->rows && m.cols == p->value->cols, "checkpoint ", path.string(),
            ": parameter '", p->name, "' has shape ", m.rows, "x", m.cols, ", expected ",
            shape_str(*p->value));
    for (size_t i = 0; i < m.numel(); ++i) p->value->data[i] = T(m.data[i]);
  }
  return info;
}

}  // namespace asa
