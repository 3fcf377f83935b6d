#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "asa/features.hpp"
#include "asa/synth.hpp"
#include "asa/util.hpp"

using namespace asa;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("asa_feat_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

AudioBuffer sine_tone(double hz, double seconds, int sample_rate, double amplitude = 0.5) {
  AudioBuffer a;
  a.sample_rate = sample_rate;
  a.samples.resize(size_t(seconds * sample_rate));
  for (size_t i = 0; i < a.samples.size(); ++i)
    a.samples[i] = float(amplitude * std::sin(2.0 * kPi * hz * double(i) / sample_rate));
  return a;
}

AudioBuffer square_tone(double hz, double seconds, int sample_rate, double amplitude = 0.5) {
  AudioBuffer a;
  a.sample_rate = sample_rate;
  a.samples.resize(size_t(seconds * sample_rate));
  for (size_t i = 0; i < a.samples.size(); ++i) {
    double phase = std::fmod(hz * double(i) / sample_rate, 1.0);
    a.samples[i] = float(phase < 0.5 ? amplitude : -amplitude);
  }
  return a;
}

double median_pitch(const std::vector<PitchFrame>& frames) {
  std::vector<double> voiced;
  for (const auto& f : frames)
    if (f.voiced) voiced.push_back(f.pitch_hz);
  REQUIRE(!voiced.empty());
  std::sort(voiced.begin(), voiced.end());
  return voiced[voiced.size() / 2];
}

}  // namespace

TEST_CASE("pure tones are recovered within 3 Hz") {
  for (double hz : {100.0, 150.0, 220.0, 300.0}) {
    auto audio = sine_tone(hz, 1.0, 16000);
    auto frames = extract_pitch(audio.samples, audio.sample_rate);
    int voiced = 0;
    for (const auto& f : frames) {
      if (!f.voiced) continue;
      ++voiced;
      CHECK(std::abs(f.pitch_hz - hz) < 3.0);
    }
    CHECK(voiced == int(frames.size()));  // a clean tone is voiced everywhere
  }
}

TEST_CASE("tone recovery also works at 8 kHz") {
  auto audio = sine_tone(220.0, 0.5, 8000);
  auto frames = extract_pitch(audio.samples, audio.sample_rate);
  CHECK(std::abs(median_pitch(frames) - 220.0) < 3.0);
}

TEST_CASE("silence is unvoiced everywhere") {
  AudioBuffer a;
  a.sample_rate = 16000;
  a.samples.assign(16000, 0.0f);
  for (const auto& f : extract_pitch(a.samples, a.sample_rate)) {
    CHECK(!f.voiced);
    CHECK(f.pitch_hz == 0.0);
  }
}

TEST_CASE("square wave fundamental is found, not an overtone") {
  auto audio = square_tone(100.0, 1.0, 16000);
  auto frames = extract_pitch(audio.samples, audio.sample_rate);
  for (const auto& f : frames)
    if (f.voiced) CHECK(std::abs(f.pitch_hz - 100.0) < 3.0);
  CHECK(std::abs(median_pitch(frames) - 100.0) < 3.0);
}

TEST_CASE("pitch extraction rejects bad input") {
  std::vector<float> tiny(100, 0.1f);
  CHECK_THROWS_WITH_AS(extract_pitch(tiny, 16000), doctest::Contains("shorter than one window"),
                       Error);
  std::vector<float> ok(16000, 0.1f);
  CHECK_THROWS_AS(extract_pitch(ok, 4000), Error);
}

TEST_CASE("delivery features over a synthesized tone") {
  auto audio = sine_tone(220.0, 1.0, 16000);
  std::vector<WordAlignment> words = {{"hello", 0.10, 0.42, 0.9}, {"world", 0.50, 0.95, 0.6}};
  auto m = delivery_features(audio, words);
  REQUIRE(m.rows == 2);
  REQUIRE(m.cols == 16);

  for (int w = 0; w < 2; ++w) {
    CHECK(std::abs(m.at(w, kPitchMean) - 220.0) < 3.0);
    CHECK(m.at(w, kPitchStd) < 0.5);  // constant tone
    CHECK(std::abs(m.at(w, kPitchMedian) - 220.0) < 3.0);
    CHECK(m.at(w, kPitchMad) < 0.5);
    CHECK(m.at(w, kPitchMax) - m.at(w, kPitchMin) < 1.0);
    CHECK(m.at(w, kEnergyMean) > 0.0f);
  }
  CHECK(m.at(0, kDuration) == doctest::Approx(0.32));
  CHECK(m.at(1, kDuration) == doctest::Approx(0.45));
  CHECK(m.at(0, kConfidence) == doctest::Approx(0.9));
  CHECK(m.at(1, kConfidence) == doctest::Approx(0.6));
}

TEST_CASE("unvoiced segments zero the pitch stats but keep energy") {
  // low-amplitude white noise: aperiodic, clearly audible energy
  AudioBuffer a;
  a.sample_rate = 16000;
  a.samples.resize(16000);
  std::mt19937_64 rng(99);
  for (auto& s : a.samples) s = float(uniform_range(rng, -0.2, 0.2));
  std::vector<WordAlignment> words = {{"noise", 0.1, 0.6, 1.0}};
  auto m = delivery_features(a, words);
  REQUIRE(m.rows == 1);
  for (int c = kPitchMean; c <= kPitchMin; ++c) CHECK(m.at(0, c) == 0.0f);
  CHECK(m.at(0, kEnergyMean) > 0.05f);
  CHECK(m.at(0, kEnergySum) > 0.0f);
}

TEST_CASE("delivery features edge cases") {
  auto audio = sine_tone(220.0, 0.5, 16000);
  SUBCASE("empty alignment list gives a 0 x 16 matrix") {
    auto m = delivery_features(audio, {});
    CHECK(m.rows == 0);
    CHECK(m.cols == 16);
  }
  SUBCASE("alignment outside the audio is an error") {
    std::vector<WordAlignment> words = {{"late", 0.4, 0.9, 1.0}};
    CHECK_THROWS_WITH_AS(delivery_features(audio, words), doctest::Contains("beyond audio"),
                         Error);
  }
  SUBCASE("overlapping alignments are an error") {
    std::vector<WordAlignment> words = {{"a", 0.0, 0.3, 1.0}, {"b", 0.2, 0.4, 1.0}};
    CHECK_THROWS_WITH_AS(delivery_features(audio, words), doctest::Contains("overlaps"), Error);
  }
}

TEST_CASE("language features one/multi-hot layout") {
  const auto& vocab = FeatureVocab::builtin();
  REQUIRE(vocab.size() == 263);

  SUBCASE("plain token has exactly two ones") {
    std::vector<LinguisticToken> toks = {{"dog", "NOUN", "nsubj", {}}};
    auto m = language_features(toks, vocab);
    REQUIRE(m.rows == 1);
    REQUIRE(m.cols == 263);
    double sum = 0;
    int ones = 0;
    for (int j = 0; j < 263; ++j) {
      sum += m.at(0, j);
      if (m.at(0, j) == 1.0f) ++ones;
    }
    CHECK(sum == 2.0);
    CHECK(ones == 2);
  }
  SUBCASE("three morph features give row sum 5") {
    std::vector<LinguisticToken> toks = {
        {"runs", "VERB", "root", {"Number=Sing", "Person=3", "Tense=Pres"}}};
    auto m = language_features(toks, vocab);
    double sum = 0;
    for (int j = 0; j < 263; ++j) sum += m.at(0, j);
    CHECK(sum == 5.0);
  }
  SUBCASE("out-of-vocabulary entries hit the unknown slots") {
    std::vector<LinguisticToken> toks = {{"x", "GLORP", "zorp", {"Weird=Yes", "Strange=No"}}};
    auto m = language_features(toks, vocab);
    CHECK(m.at(0, vocab.upos_slot("GLORP")) == 1.0f);
    CHECK(m.at(0, vocab.deprel_slot("zorp")) == 1.0f);
    CHECK(m.at(0, vocab.morph_slot("Weird=Yes")) == 2.0f);  // both unknowns accumulate
    double sum = 0;
    for (int j = 0; j < 263; ++j) sum += m.at(0, j);
    CHECK(sum == 4.0);  // 2 + |morph set|
  }
  SUBCASE("row sums are 2 + |morph set| on random tokens") {
    std::mt19937_64 rng(5);
    const std::vector<std::string> pool = {"Number=Sing", "Tense=Past", "Bogus=X",
                                           "Case=Nom",    "Mood=Ind",   "Alien=Z"};
    for (int trial = 0; trial < 30; ++trial) {
      LinguisticToken tok{"w", "NOUN", "obj", {}};
      std::set<std::string> chosen;
      const int n = int(rng() % 5);
      for (int i = 0; i < n; ++i) chosen.insert(pool[rng() % pool.size()]);
      tok.morph.assign(chosen.begin(), chosen.end());
      const std::vector<std::string> once = tok.morph;
      tok.morph.insert(tok.morph.end(), once.begin(), once.end());  // duplicates
      auto m = language_features({tok}, vocab);
      double sum = 0;
      for (int j = 0; j < 263; ++j) sum += m.at(0, j);
      CHECK(sum == 2.0 + double(chosen.size()));
    }
  }
}

TEST_CASE("shipped vocabulary file matches the built-in") {
  // repo-root data file, reachable from the build tree
  fs::path here = fs::path(__FILE__).parent_path().parent_path();
  auto vocab = FeatureVocab::from_file(here / "data" / "feature_vocab_v1.txt");
  CHECK(vocab.version() == FeatureVocab::builtin().version());
  CHECK(vocab.slots() == FeatureVocab::builtin().slots());
}

TEST_CASE("tensor file round-trip and errors") {
  auto dir = temp_dir("tnsr");
  std::mt19937_64 rng(13);

  SUBCASE("round-trip preserves bytes") {
    FloatMatrix m(7, 5);
    for (auto& v : m.data) v = float(uniform_range(rng, -10, 10));
    write_tnsr(dir / "a.tnsr", m);
    auto r = read_tnsr(dir / "a.tnsr");
    CHECK(r.rows == 7);
    CHECK(r.cols == 5);
    CHECK(r.data == m.data);
  }
  SUBCASE("zero-row matrix") {
    write_tnsr(dir / "z.tnsr", FloatMatrix(0, 16));
    auto r = read_tnsr(dir / "z.tnsr");
    CHECK(r.rows == 0);
    CHECK(r.cols == 16);
  }
  SUBCASE("header echo") {
    FloatMatrix m(1, 768);
    write_tnsr(dir / "p.tnsr", m);
    auto pair = ingest_embeddings(dir / "p.tnsr", dir / "p.tnsr", 768, 768);
    CHECK(pair.prompt.cols == 768);
  }
  SUBCASE("truncated payload") {
    std::ofstream out(dir / "t.tnsr", std::ios::binary);
    out << "TNSR v1 4 4\n";
    float x = 1.0f;
    out.write(reinterpret_cast<char*>(&x), 4);  // 1 of 16 floats
    out.close();
    CHECK_THROWS_WITH_AS(read_tnsr(dir / "t.tnsr"), doctest::Contains("truncated tensor"),
                         Error);
  }
  SUBCASE("corrupt header") {
    std::ofstream(dir / "c.tnsr") << "TENSOR 4 4\n";
    CHECK_THROWS_WITH_AS(read_tnsr(dir / "c.tnsr"), doctest::Contains("corrupt header"), Error);
  }
  SUBCASE("dim mismatch against config") {
    write_tnsr(dir / "p.tnsr", FloatMatrix(1, 8));
    write_tnsr(dir / "s.tnsr", FloatMatrix(3, 12));
    CHECK_THROWS_AS(ingest_embeddings(dir / "p.tnsr", dir / "s.tnsr", 16, 12), Error);
    CHECK_THROWS_AS(ingest_embeddings(dir / "p.tnsr", dir / "s.tnsr", 8, 24), Error);
    auto ok = ingest_embeddings(dir / "p.tnsr", dir / "s.tnsr", 8, 12);
    CHECK(ok.speech.rows == 3);
  }
}

TEST_CASE("wav round-trip and validation") {
  auto dir = temp_dir("wav");
  auto tone = sine_tone(220.0, 0.25, 16000);
  write_wav(dir / "t.wav", tone);
  auto back = read_wav(dir / "t.wav");
  CHECK(back.sample_rate == 16000);
  REQUIRE(back.samples.size() == tone.samples.size());
  for (size_t i = 0; i < back.samples.size(); i += 997)
    CHECK(back.samples[i] == doctest::Approx(tone.samples[i]).epsilon(1e-3));

  AudioBuffer bad;
  bad.sample_rate = 4000;
  bad.samples.assign(100, 0.0f);
  CHECK_THROWS_AS(write_wav(dir / "bad.wav", bad), Error);
  CHECK_THROWS_AS(read_wav(dir / "missing.wav"), Error);
}

TEST_CASE("synthetic corpus determinism and geometry") {
  SynthSpec spec;
  spec.train_per_class.assign(8, 4);
  spec.valid_per_class.assign(8, 0);
  spec.test_per_class.assign(8, 0);
  spec.seed = 21;

  SUBCASE("same seed twice gives byte-identical output") {
    auto d1 = temp_dir("synth1");
    auto d2 = temp_dir("synth2");
    generate_synthetic_corpus(spec, d1);
    generate_synthetic_corpus(spec, d2);
    for (auto& entry : fs::recursive_directory_iterator(d1)) {
      if (!entry.is_regular_file()) continue;
      auto rel = fs::relative(entry.path(), d1);
      std::ifstream f1(entry.path(), std::ios::binary), f2(d2 / rel, std::ios::binary);
      std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
      std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
      CHECK(s1 == s2);
    }
  }
  SUBCASE("noise 0 pins every row to the class centroid") {
    auto dir = temp_dir("synth_noiseless");
    auto s = spec;
    s.noise = 0.0;
    auto res = generate_synthetic_corpus(s, dir);
    auto scale = CefrScale::default_scale();
    for (const auto& inst : load_instances(res.train_manifest, scale)) {
      const int cls = inst.label(Aspect::holistic);
      auto centroid = synth_centroid(s, "delivery", cls, 16);
      for (int r = 0; r < inst.delivery.rows; ++r)
        for (int j = 0; j < 16; ++j)
          CHECK(inst.delivery.at(r, j) == doctest::Approx(centroid.at(0, j)).epsilon(1e-6));
    }
  }
  SUBCASE("nearest centroid is perfect on noiseless data") {
    auto dir = temp_dir("synth_nc");
    auto s = spec;
    s.noise = 0.0;
    auto res = generate_synthetic_corpus(s, dir);
    auto scale = CefrScale::default_scale();
    int correct = 0, total = 0;
    for (const auto& inst : load_instances(res.train_manifest, scale)) {
      double best = 1e300;
      int best_cls = 0;
      for (int cls = 1; cls <= 8; ++cls) {
        auto c = synth_centroid(s, "prompt", cls, s.prompt_dim);
        double d = 0;
        for (int j = 0; j < s.prompt_dim; ++j) {
          double diff = inst.prompt.at(0, j) - c.at(0, j);
          d += diff * diff;
        }
        if (d < best) {
          best = d;
          best_cls = cls;
        }
      }
      correct += best_cls == inst.label(Aspect::holistic);
      ++total;
    }
    CHECK(correct == total);
  }
  SUBCASE("empirical adjacent centroid distances reproduce the injected gaps") {
    auto dir = temp_dir("synth_gaps");
    auto s = spec;
    s.noise = 0.02;
    s.train_per_class.assign(8, 16);
    auto res = generate_synthetic_corpus(s, dir);
    auto scale = CefrScale::default_scale();
    auto instances = load_instances(res.train_manifest, scale);

    std::vector<std::vector<double>> mean(8, std::vector<double>(s.speech_dim, 0.0));
    std::vector<int> rows(8, 0);
    for (const auto& inst : instances) {
      const int c = inst.label(Aspect::holistic) - 1;
      for (int r = 0; r < inst.speech.rows; ++r)
        for (int j = 0; j < s.speech_dim; ++j) mean[c][j] += inst.speech.at(r, j);
      rows[c] += inst.speech.rows;
    }
    for (int c = 0; c < 8; ++c)
      for (auto& v : mean[c]) v /= rows[c];
    for (int c = 0; c < 7; ++c) {
      double d = 0;
      for (int j = 0; j < s.speech_dim; ++j) {
        double diff = mean[c + 1][j] - mean[c][j];
        d += diff * diff;
      }
      CHECK(std::sqrt(d) == doctest::Approx(s.gaps[c]).epsilon(0.10));
    }
  }
  SUBCASE("all-zero counts are rejected") {
    SynthSpec s;
    s.train_per_class.assign(8, 0);
    s.valid_per_class.assign(8, 0);
    s.test_per_class.assign(8, 0);
    CHECK_THROWS_WITH_AS(generate_synthetic_corpus(s, temp_dir("synth_zero")),
                         doctest::Contains("all class counts are zero"), Error);
  }
}
