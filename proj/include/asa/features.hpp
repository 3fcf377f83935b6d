#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "asa/pitch.hpp"
#include "asa/tensor_io.hpp"
#include "asa/wav.hpp"

namespace asa {

struct WordAlignment {
  std::string word;
  double start_s = 0.0;
  double end_s = 0.0;
  double confidence = 1.0;
};

// Column layout of one delivery feature row (width 16): seven pitch
// statistics over voiced frames, the same seven over per-frame RMS energy,
// then segment duration and ASR confidence. A segment with no voiced frames
// gets zeros for all pitch statistics.
enum DeliveryColumn {
  kPitchMean = 0, kPitchStd, kPitchMedian, kPitchMad, kPitchSum, kPitchMax, kPitchMin,
  kEnergyMean, kEnergyStd, kEnergyMedian, kEnergyMad, kEnergySum, kEnergyMax, kEnergyMin,
  kDuration, kConfidence,
};
inline constexpr int kDeliveryDim = 16;

struct LinguisticToken {
  std::string word;
  std::string upos;
  std::string deprel;
  std::vector<std::string> morph;  // feature=value strings
};

// Fixed 263-slot vocabulary: 18 POS slots (17 universal tags + unknown),
// 51 dependency-relation slots (50 relations + unknown), 194 morphological
// feature=value slots (193 fixed + unknown). The vocabulary is versioned;
// runs are only comparable under the same version.
class FeatureVocab {
 public:
  static const FeatureVocab& builtin();             // version v1, compiled in
  static FeatureVocab from_file(const std::filesystem::path& path);

  int size() const { return int(slots_.size()); }
  const std::vector<std::string>& slots() const { return slots_; }
  const std::string& version() const { return version_; }

  int upos_slot(const std::string& tag) const;      // unknown -> upos unknown slot
  int deprel_slot(const std::string& rel) const;
  int morph_slot(const std::string& fv) const;      // unknown -> morph unknown slot

  void write_file(const std::filesystem::path& path) const;

 private:
  FeatureVocab(std::string version, std::vector<std::string> slots);
  std::string version_;
  std::vector<std::string> slots_;
  std::unordered_map<std::string, int> index_;
  int upos_unknown_ = -1, deprel_unknown_ = -1, morph_unknown_ = -1;
};
inline constexpr int kLanguageDim = 263;

// Per-word delivery feature rows (m x 16) from pitch/energy frames and word
// alignments. Alignments must be sorted, non-overlapping, and inside the
// audio. A frame belongs to the word whose span contains its center time.
FloatMatrix delivery_features(const std::vector<PitchFrame>& frames,
                              const std::vector<WordAlignment>& alignments,
                              double audio_duration_s);

// Convenience: runs the pitch extractor first.
FloatMatrix delivery_features(const AudioBuffer& audio,
                              const std::vector<WordAlignment>& alignments,
                              const PitchConfig& cfg = {});

// Per-token one/multi-hot rows (m x 263): one-hot POS, one-hot dependency
// relation, multi-hot morphological features. Unknown entries land in the
// section's unknown slot; multiple unknown morph features accumulate there
// so every row sums to 2 + |morph set|.
FloatMatrix language_features(const std::vector<LinguisticToken>& tokens,
                              const FeatureVocab& vocab);

// JSON readers for the external alignment / annotation formats.
std::vector<WordAlignment> read_alignments(const std::filesystem::path& path);
std::vector<LinguisticToken> read_annotations(const std::filesystem::path& path);

// Precomputed embedding ingestion: validates that the prompt file holds a
// single row of prompt_dim and the frame file rows of speech_dim.
struct EmbeddingPair {
  FloatMatrix prompt;
  FloatMatrix speech;
};
EmbeddingPair ingest_embeddings(const std::filesystem::path& prompt_path,
                                const std::filesystem::path& speech_path, int prompt_dim,
                                int speech_dim);

}  // namespace asa
