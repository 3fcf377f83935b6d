#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "asa/model.hpp"

namespace asa {

// In-batch pair sets for one anchor: positives share its label, negatives
// carry any other label. Exhaustive over the batch.
struct PairSets {
  std::vector<int> positives;
  std::vector<int> negatives;
};

std::vector<PairSets> build_pairs(const std::vector<int>& labels);

struct MmoStats {
  long long triples = 0;  // (anchor, positive, negative) triples seen
  long long active = 0;   // triples with a positive hinge
  int anchors_without_positives = 0;
  int anchors_without_negatives = 0;
  // Smallest |hinge argument| over all triples: the distance of this batch
  // from the nearest loss kink, used to keep gradient checks away from the
  // non-differentiable set.
  double min_kink_distance = std::numeric_limits<double>::infinity();
  int zero_logit_vectors = 0;
};

template <typename T>
struct LogitBatch {
  TensorPtr<T> logits;     // B x 8
  std::vector<int> labels; // 1-based class indices, length B
};

// Plain cosine similarity, clamped to [-1, 1]; zero vectors yield 0 and
// raise the flag instead of erroring.
double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v,
                         bool* zero_flag = nullptr);

// Multi-margin ordinal loss: mean over all (anchor i, positive j, negative
// k) triples of
//   max(0, d(y_i, y_k) + cos(z_i, z_k) - cos(z_i, z_j))
// where d is the cumulative adjacent-margin distance between the anchor
// label and the negative label. Margins that grow with ordinal distance
// force distant classes further apart in logit direction space than
// neighbors. Subgradient 0 at the hinge kink.
template <typename T>
TensorPtr<T> mmo_loss(Tape<T>& tape, const LogitBatch<T>& batch,
                      const std::vector<double>& margins, MmoStats* stats = nullptr);

template <typename T>
struct CombinedLoss {
  TensorPtr<T> total;  // lambda * ce + (1 - lambda) * mmo
  TensorPtr<T> ce;
  TensorPtr<T> mmo;
  MmoStats stats;
};

template <typename T>
CombinedLoss<T> combined_loss(Tape<T>& tape, const LogitBatch<T>& batch,
                              const std::vector<double>& margins, double lambda);

// Adjacent-margin schedule. In data_driven mode the margins are refreshed
// once per epoch from class-centroid cosine gaps of the training logits,
// smoothed by EMA; in fixed mode estimate_margins is the identity.
struct MarginSchedule {
  MarginMode mode = MarginMode::fixed;
  std::vector<double> margins = std::vector<double>(kClasses - 1, 0.5);
  double ema_decay = 0.9;
  double scale = 1.0;

  static MarginSchedule from_config(const RunConfig& cfg);
  void validate() const;
};

struct MarginUpdate {
  // 1 - cos(centroid_c, centroid_c+1) per adjacent pair; NaN where a class
  // had no instances (that margin keeps its previous value).
  std::vector<double> raw_gaps = std::vector<double>(kClasses - 1,
                                                     std::numeric_limits<double>::quiet_NaN());
  std::vector<int> retained_pairs;  // 1-based pair indices left unchanged
  int zero_logit_vectors = 0;
};

template <typename T>
MarginUpdate estimate_margins(AspectModel<T>& model, const std::vector<Instance>& instances,
                              MarginSchedule& schedule);

// ---------------------------------------------------------------------------
// Implementation

inline std::vector<PairSets> build_pairs(const std::vector<int>& labels) {
  const int B = int(labels.size());
  std::vector<PairSets> out(B);
  for (int i = 0; i < B; ++i) {
    for (int j = 0; j < B; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) out[i].positives.push_back(j);
    }
    for (int k = 0; k < B; ++k)
      if (labels[k] != labels[i]) out[i].negatives.push_back(k);
  }
  return out;
}

inline double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v,
                                bool* zero_flag) {
  require(u.size() == v.size() && !u.empty(), "cosine: length mismatch");
  double uu = 0, vv = 0, uv = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    uu += u[i] * u[i];
    vv += v[i] * v[i];
    uv += u[i] * v[i];
  }
  bool zero = uu == 0.0 || vv == 0.0;
  if (zero_flag) *zero_flag = zero;
  if (zero) return 0.0;
  return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

template <typename T>
TensorPtr<T> mmo_loss(Tape<T>& tape, const LogitBatch<T>& batch,
                      const std::vector<double>& margins, MmoStats* stats_out) {
  const auto& z = batch.logits;
  const int B = z->rows, C = z->cols;
  require(B >= 1, "mmo: empty batch");
  require(int(batch.labels.size()) == B, "mmo: labels length ", batch.labels.size(),
          " vs batch ", B);
  require(int(margins.size()) == C - 1, "mmo: expected ", C - 1, " margins, got ",
          margins.size());
  for (int y : batch.labels)
    require(y >= 1 && y <= C, "mmo: label out of range: ", y);

  MmoStats stats;
  // pairwise cosines over logit rows
  std::vector<T> norms(B);
  std::vector<uint8_t> zero(B);
  for (int i = 0; i < B; ++i) {
    T ss = T(0);
    for (int j = 0; j < C; ++j) ss += z->at(i, j) * z->at(i, j);
    norms[i] = std::sqrt(ss);
    zero[i] = norms[i] == T(0);
    if (zero[i]) ++stats.zero_logit_vectors;
  }
  std::vector<T> cos(size_t(B) * B, T(0));
  for (int i = 0; i < B; ++i) {
    for (int k = i + 1; k < B; ++k) {
      T c = T(0);
      if (!zero[i] && !zero[k]) {
        T dot = T(0);
        for (int j = 0; j < C; ++j) dot += z->at(i, j) * z->at(k, j);
        c = std::clamp(dot / (norms[i] * norms[k]), T(-1), T(1));
      }
      cos[size_t(i) * B + k] = c;
      cos[size_t(k) * B + i] = c;
    }
  }

  const auto pairs = build_pairs(batch.labels);
  T sum = T(0);
  auto active = std::make_shared<std::vector<std::array<int, 3>>>();
  for (int i = 0; i < B; ++i) {
    if (pairs[i].positives.empty()) ++stats.anchors_without_positives;
    if (pairs[i].negatives.empty()) ++stats.anchors_without_negatives;
    for (int j : pairs[i].positives) {
      for (int k : pairs[i].negatives) {
        const double d = cumulative_distance(margins, batch.labels[i], batch.labels[k]);
        const T arg = T(d) + cos[size_t(i) * B + k] - cos[size_t(i) * B + j];
        ++stats.triples;
        stats.min_kink_distance = std::min(stats.min_kink_distance, std::abs(double(arg)));
        if (arg > T(0)) {
          sum += arg;
          ++stats.active;
          active->push_back({i, j, k});
        }
      }
    }
  }

  auto out = make_tensor<T>(1, 1, z->requires_grad);
  out->data[0] = stats.triples ? sum / T(stats.triples) : T(0);
  if (stats_out) *stats_out = stats;

  if (out->requires_grad && stats.triples > 0) {
    const long long n_triples = stats.triples;
    tape.record([z, out, active, norms = std::move(norms), zero = std::move(zero),
                 cos = std::move(cos), n_triples] {
      const int B = z->rows, C = z->cols;
      const T w = out->grad[0] / T(n_triples);
      // d cos(a, b) / d z_a = z_b / (|a||b|) - cos * z_a / |a|^2
      auto add_dcos = [&](int a, int b, T coeff) {
        if (zero[a] || zero[b]) return;
        const T inv_ab = T(1) / (norms[a] * norms[b]);
        const T c = cos[size_t(a) * B + b];
        const T inv_aa = T(1) / (norms[a] * norms[a]);
        const T inv_bb = T(1) / (norms[b] * norms[b]);
        for (int j = 0; j < C; ++j) {
          z->gat(a, j) += coeff * (z->at(b, j) * inv_ab - c * z->at(a, j) * inv_aa);
          z->gat(b, j) += coeff * (z->at(a, j) * inv_ab - c * z->at(b, j) * inv_bb);
        }
      };
      for (const auto& [i, j, k] : *active) {
        add_dcos(i, k, w);
        add_dcos(i, j, -w);
      }
    });
  }
  return out;
}

template <typename T>
CombinedLoss<T> combined_loss(Tape<T>& tape, const LogitBatch<T>& batch,
                              const std::vector<double>& margins, double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, "combined_loss: lambda must be in [0,1], got ",
          lambda);
  CombinedLoss<T> result;
  std::vector<int> labels0(batch.labels.size());
  for (size_t i = 0; i < batch.labels.size(); ++i) labels0[i] = batch.labels[i] - 1;
  result.ce = ops::cross_entropy_mean(tape, batch.logits, labels0);
  result.mmo = mmo_loss(tape, batch, margins, &result.stats);
  result.total = ops::add(tape, ops::scale(tape, result.ce, T(lambda)),
                          ops::scale(tape, result.mmo, T(1.0 - lambda)));
  return result;
}

inline MarginSchedule MarginSchedule::from_config(const RunConfig& cfg) {
  MarginSchedule s;
  s.mode = cfg.margin_mode;
  s.margins = cfg.margins;
  s.ema_decay = cfg.ema_decay;
  s.scale = cfg.margin_scale;
  s.validate();
  return s;
}

inline void MarginSchedule::validate() const {
  require(margins.size() == size_t(kClasses - 1), "margin schedule: expected ", kClasses - 1,
          " margins");
  for (double m : margins)
    require(std::isfinite(m) && m >= 0.0, "margin schedule: margins must be finite and >= 0");
  require(ema_decay >= 0.0 && ema_decay < 1.0, "margin schedule: ema_decay must be in [0,1)");
  require(scale > 0.0, "margin schedule: scale must be > 0");
}

template <typename T>
MarginUpdate estimate_margins(AspectModel<T>& model, const std::vector<Instance>& instances,
                              MarginSchedule& schedule) {
  schedule.validate();
  MarginUpdate update;
  if (schedule.mode == MarginMode::fixed) return update;

  std::vector<std::vector<double>> centroid(kClasses, std::vector<double>(kClasses, 0.0));
  std::vector<int> count(kClasses, 0);
  for (const auto& inst : instances) {
    const int y = inst.label(model.aspect);
    auto z = model.logits(inst);
    for (int j = 0; j < kClasses; ++j) centroid[y - 1][j] += z[j];
    count[y - 1] += 1;
  }
  for (int c = 0; c < kClasses; ++c)
    if (count[c] > 0)
      for (double& v : centroid[c]) v /= count[c];

  for (int c = 1; c < kClasses; ++c) {
    if (count[c - 1] == 0 || count[c] == 0) {
      update.retained_pairs.push_back(c);
      continue;
    }
    bool zero = false;
    const double raw = 1.0 - cosine_similarity(centroid[c - 1], centroid[c], &zero);
    if (zero) ++update.zero_logit_vectors;
    update.raw_gaps[c - 1] = raw;
    // cosine gaps live in [0, 2]; the clamp keeps scaled hinges satisfiable
    const double target = std::clamp(schedule.scale * raw, 0.0, 2.0);
    schedule.margins[c - 1] =
        schedule.ema_decay * schedule.margins[c - 1] + (1.0 - schedule.ema_decay) * target;
  }
  return update;
}

}  // namespace asa
