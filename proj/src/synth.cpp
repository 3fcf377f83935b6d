#include "asa/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "asa/util.hpp"

namespace asa {

namespace {

constexpr int kClasses = 8;

std::mt19937_64 seeded(uint64_t seed, const std::string& tag, uint64_t a = 0, uint64_t b = 0) {
  uint64_t h = hash_combine(seed, fnv1a64(tag));
  h = hash_combine(h, a);
  h = hash_combine(h, b);
  return std::mt19937_64(h);
}

// Orthonormal 2-D subspace for one modality, derived only from the seed.
void modality_frame(const SynthSpec& spec, const std::string& modality, int dim,
                    std::vector<double>& u, std::vector<double>& v) {
  auto rng = seeded(spec.seed, "modality:" + modality);
  u.resize(dim);
  v.resize(dim);
  double nu = 0.0;
  for (int j = 0; j < dim; ++j) {
    u[j] = gaussian(rng);
    nu += u[j] * u[j];
  }
  nu = std::sqrt(nu);
  for (int j = 0; j < dim; ++j) u[j] /= nu;
  double dot = 0.0;
  for (int j = 0; j < dim; ++j) {
    v[j] = gaussian(rng);
    dot += v[j] * u[j];
  }
  double nv = 0.0;
  for (int j = 0; j < dim; ++j) {
    v[j] -= dot * u[j];
    nv += v[j] * v[j];
  }
  nv = std::sqrt(nv);
  require(nv > 1e-9, "synth: degenerate modality frame");
  for (int j = 0; j < dim; ++j) v[j] /= nv;
}

// Centroids sit on a circle of radius R; the angle step between adjacent
// classes is chosen so the chord between them equals the injected gap
// exactly. Equal centroid norms keep the class geometry free of scale-end
// artifacts, so pairwise overlap (and with it the recoverable ordinal
// structure) is governed by the gaps alone.
double circle_radius(const SynthSpec& spec) {
  double total = 0.0, biggest = 0.0;
  for (double g : spec.gaps) {
    total += g;
    biggest = std::max(biggest, g);
  }
  return std::max({1.0, total / 2.4, biggest / 1.9});
}

double class_angle(const SynthSpec& spec, double radius, int cls) {
  double phi = 0.0;
  for (int c = 1; c < cls; ++c) phi += 2.0 * std::asin(spec.gaps[c - 1] / (2.0 * radius));
  return phi;
}

int dim_of(const SynthSpec& spec, const std::string& modality) {
  if (modality == "prompt") return spec.prompt_dim;
  if (modality == "speech") return spec.speech_dim;
  if (modality == "delivery") return 16;
  if (modality == "language") return 263;
  throw Error(msg("synth: unknown modality '", modality, "'"));
}

FloatMatrix sample_rows(const SynthSpec& spec, const std::string& modality, int cls, int rows,
                        std::mt19937_64& rng) {
  const int dim = dim_of(spec, modality);
  std::vector<double> u, v;
  modality_frame(spec, modality, dim, u, v);
  const double radius = circle_radius(spec);
  const double phi = class_angle(spec, radius, cls);
  FloatMatrix m(rows, dim);
  for (int r = 0; r < rows; ++r)
    for (int j = 0; j < dim; ++j)
      m.at(r, j) = float(radius * (u[j] * std::cos(phi) + v[j] * std::sin(phi)) +
                         spec.noise * gaussian(rng));
  return m;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + int(rng() % uint64_t(hi - lo + 1));
}

}  // namespace

void SynthSpec::validate() const {
  require(gaps.size() == size_t(kClasses - 1), "synth: expected ", kClasses - 1, " gaps, got ",
          gaps.size());
  for (double g : gaps) require(std::isfinite(g) && g > 0.0, "synth: gaps must be positive");
  require(noise >= 0.0, "synth: noise must be >= 0");
  require(prompt_dim >= 1 && speech_dim >= 1, "synth: dims must be >= 1");
  require(frames_min >= 1 && frames_max >= frames_min, "synth: bad frame count range");
  require(words_min >= 1 && words_max >= words_min, "synth: bad word count range");
  auto check_counts = [](const std::vector<int>& v, const char* what) {
    require(v.size() == size_t(kClasses), "synth: ", what, " needs ", kClasses, " entries");
    for (int c : v) require(c >= 0, "synth: negative count in ", what);
  };
  check_counts(train_per_class, "train_per_class");
  check_counts(valid_per_class, "valid_per_class");
  check_counts(test_per_class, "test_per_class");
  long long total = 0;
  for (int c = 0; c < kClasses; ++c)
    total += train_per_class[c] + valid_per_class[c] + test_per_class[c];
  require(total > 0, "synth: all class counts are zero");
}

FloatMatrix synth_centroid(const SynthSpec& spec, const std::string& modality, int cls,
                           int dim) {
  require(cls >= 1 && cls <= kClasses, "synth_centroid: class out of range: ", cls);
  require(dim == dim_of(spec, modality), "synth_centroid: dim mismatch");
  std::vector<double> u, v;
  modality_frame(spec, modality, dim, u, v);
  const double radius = circle_radius(spec);
  const double phi = class_angle(spec, radius, cls);
  FloatMatrix m(1, dim);
  for (int j = 0; j < dim; ++j)
    m.at(0, j) = float(radius * (u[j] * std::cos(phi) + v[j] * std::sin(phi)));
  return m;
}

SynthResult generate_synthetic_corpus(const SynthSpec& spec,
                                      const std::filesystem::path& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "tensors");

  SynthResult result;
  const struct {
    const char* name;
    const std::vector<int>* counts;
  } splits[] = {{"train", &spec.train_per_class},
                {"valid", &spec.valid_per_class},
                {"test", &spec.test_per_class}};

  for (const auto& split : splits) {
    const fs::path manifest_path = out_dir / (std::string(split.name) + ".jsonl");
    std::ofstream manifest(manifest_path, std::ios::binary);
    require(manifest.good(), "synth: cannot write ", manifest_path.string());

    for (int cls = 1; cls <= kClasses; ++cls) {
      for (int idx = 0; idx < (*split.counts)[cls - 1]; ++idx) {
        char id[64];
        std::snprintf(id, sizeof id, "%s_c%d_%03d", split.name, cls, idx);
        auto rng = seeded(spec.seed, std::string("instance:") + id);

        const int t = uniform_int(rng, spec.frames_min, spec.frames_max);
        const int m = uniform_int(rng, spec.words_min, spec.words_max);
        const FloatMatrix prompt = sample_rows(spec, "prompt", cls, 1, rng);
        const FloatMatrix speech = sample_rows(spec, "speech", cls, t, rng);
        const FloatMatrix delivery = sample_rows(spec, "delivery", cls, m, rng);
        const FloatMatrix language = sample_rows(spec, "language", cls, m, rng);

        const std::string stem = std::string("tensors/") + id;
        write_tnsr(out_dir / (stem + ".prompt.tnsr"), prompt);
        write_tnsr(out_dir / (stem + ".speech.tnsr"), speech);
        write_tnsr(out_dir / (stem + ".delivery.tnsr"), delivery);
        write_tnsr(out_dir / (stem + ".language.tnsr"), language);

        char score[8];
        std::snprintf(score, sizeof score, "%.1f", 1.0 + 0.5 * (cls - 1));
        manifest << "{\"id\":\"" << id << "\",\"task_id\":\"" << spec.task_id << "\""
                 << ",\"prompt_emb\":\"" << stem << ".prompt.tnsr\""
                 << ",\"speech_frames\":\"" << stem << ".speech.tnsr\""
                 << ",\"delivery\":\"" << stem << ".delivery.tnsr\""
                 << ",\"language\":\"" << stem << ".language.tnsr\""
                 << ",\"scores\":{\"content\":" << score << ",\"delivery\":" << score
                 << ",\"language_use\":" << score << ",\"holistic\":" << score << "}}\n";
        ++result.instances;
      }
    }
    require(manifest.good(), "synth: write failed: ", manifest_path.string());
  }
  result.train_manifest = out_dir / "train.jsonl";
  result.valid_manifest = out_dir / "valid.jsonl";
  result.test_manifest = out_dir / "test.jsonl";
  return result;
}

}  // namespace asa
