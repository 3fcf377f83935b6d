#include "asa/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "asa/util.hpp"

namespace asa {

using nlohmann::json;

namespace {

double median_of(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// mean, population std, median, MAD, sum, max, min; zeros for empty input.
std::array<double, 7> stat7(const std::vector<double>& xs) {
  if (xs.empty()) return {0, 0, 0, 0, 0, 0, 0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double stdev = std::sqrt(var / xs.size());
  const double med = median_of(xs);
  std::vector<double> dev;
  dev.reserve(xs.size());
  for (double x : xs) dev.push_back(std::abs(x - med));
  const double mad = median_of(dev);
  const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  return {mean, stdev, med, mad, sum, *mx, *mn};
}

void check_alignments(const std::vector<WordAlignment>& alignments, double duration_s) {
  double prev_end = 0.0;
  for (size_t i = 0; i < alignments.size(); ++i) {
    const auto& w = alignments[i];
    require(w.start_s >= 0.0 && w.end_s > w.start_s, "alignment ", i, " ('", w.word,
            "'): need 0 <= start < end, got [", w.start_s, ", ", w.end_s, "]");
    require(w.start_s >= prev_end - 1e-9, "alignment ", i, " ('", w.word,
            "'): overlaps or precedes the previous word");
    require(w.end_s <= duration_s + 1e-9, "alignment ", i, " ('", w.word,
            "'): ends at ", w.end_s, "s beyond audio duration ", duration_s, "s");
    require(w.confidence >= 0.0 && w.confidence <= 1.0, "alignment ", i, " ('", w.word,
            "'): confidence ", w.confidence, " outside [0,1]");
    prev_end = w.end_s;
  }
}

}  // namespace

FloatMatrix delivery_features(const std::vector<PitchFrame>& frames,
                              const std::vector<WordAlignment>& alignments,
                              double audio_duration_s) {
  check_alignments(alignments, audio_duration_s);
  FloatMatrix out(int(alignments.size()), kDeliveryDim);
  for (size_t w = 0; w < alignments.size(); ++w) {
    const auto& word = alignments[w];
    std::vector<double> pitch, energy;
    for (const auto& f : frames) {
      if (f.time_s < word.start_s || f.time_s >= word.end_s) continue;
      energy.push_back(f.rms);
      if (f.voiced) pitch.push_back(f.pitch_hz);
    }
    const auto ps = stat7(pitch);
    const auto es = stat7(energy);
    for (int i = 0; i < 7; ++i) {
      out.at(int(w), kPitchMean + i) = float(ps[i]);
      out.at(int(w), kEnergyMean + i) = float(es[i]);
    }
    out.at(int(w), kDuration) = float(word.end_s - word.start_s);
    out.at(int(w), kConfidence) = float(word.confidence);
  }
  return out;
}

FloatMatrix delivery_features(const AudioBuffer& audio,
                              const std::vector<WordAlignment>& alignments,
                              const PitchConfig& cfg) {
  auto frames = extract_pitch(audio.samples, audio.sample_rate, cfg);
  return delivery_features(frames, alignments, audio.duration_s());
}

FloatMatrix language_features(const std::vector<LinguisticToken>& tokens,
                              const FeatureVocab& vocab) {
  FloatMatrix out(int(tokens.size()), vocab.size());
  for (size_t t = 0; t < tokens.size(); ++t) {
    const auto& tok = tokens[t];
    out.at(int(t), vocab.upos_slot(tok.upos)) = 1.0f;
    out.at(int(t), vocab.deprel_slot(tok.deprel)) = 1.0f;
    const std::set<std::string> morph(tok.morph.begin(), tok.morph.end());
    for (const auto& fv : morph) out.at(int(t), vocab.morph_slot(fv)) += 1.0f;
  }
  return out;
}

std::vector<WordAlignment> read_alignments(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "alignments: cannot open ", path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(msg("alignments ", path.string(), ": ", e.what()));
  }
  require(doc.is_array(), "alignments ", path.string(), ": expected a JSON array");
  std::vector<WordAlignment> out;
  for (const auto& rec : doc) {
    WordAlignment w;
    try {
      w.word = rec.at("word").get<std::string>();
      w.start_s = rec.at("start_s").get<double>();
      w.end_s = rec.at("end_s").get<double>();
      w.confidence = rec.at("confidence").get<double>();
    } catch (const json::exception& e) {
      throw Error(msg("alignments ", path.string(), ": bad record: ", e.what()));
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<LinguisticToken> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "annotations: cannot open ", path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(msg("annotations ", path.string(), ": ", e.what()));
  }
  require(doc.is_array(), "annotations ", path.string(), ": expected a JSON array");
  std::vector<LinguisticToken> out;
  for (const auto& rec : doc) {
    LinguisticToken t;
    try {
      t.word = rec.at("word").get<std::string>();
      t.upos = rec.at("upos").get<std::string>();
      t.deprel = rec.at("deprel").get<std::string>();
      if (rec.contains("morph"))
        for (const auto& m : rec.at("morph")) t.morph.push_back(m.get<std::string>());
    } catch (const json::exception& e) {
      throw Error(msg("annotations ", path.string(), ": bad record: ", e.what()));
    }
    out.push_back(std::move(t));
  }
  return out;
}

EmbeddingPair ingest_embeddings(const std::filesystem::path& prompt_path,
                                const std::filesystem::path& speech_path, int prompt_dim,
                                int speech_dim) {
  EmbeddingPair pair;
  pair.prompt = read_tnsr(prompt_path);
  pair.speech = read_tnsr(speech_path);
  require(pair.prompt.rows == 1, "prompt embedding ", prompt_path.string(),
          ": expected one row, got ", pair.prompt.rows);
  require(pair.prompt.cols == prompt_dim, "prompt embedding ", prompt_path.string(), ": width ",
          pair.prompt.cols, " != configured ", prompt_dim);
  require(pair.speech.cols == speech_dim, "speech frames ", speech_path.string(), ": width ",
          pair.speech.cols, " != configured ", speech_dim);
  return pair;
}

}  // namespace asa
