// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Patient-level folds, confusion counts and metrics, F1-maximizing threshold
// calibration for scored detectors, and prompt-style comparison.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "semio/catalog.hpp"
#include "semio/detect.hpp"
#include "semio/error.hpp"
#include "semio/ingest.hpp"
#include "semio/rng.hpp"

namespace semio {

inline constexpr int kDefaultFolds = 3;

struct FoldPlan {
  int k = kDefaultFolds;
  std::map<std::string, int> assignment;  // patient -> fold

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out(static_cast<std::size_t>(k), 0);
    for (const auto& [_, f] : assignment) ++out.at(static_cast<std::size_t>(f));
    return out;
  }
  std::vector<std::string> patients_in(int fold) const {
    std::vector<std::string> out;
    for (const auto& [p, f] : assignment)
      if (f == fold) out.push_back(p);
    return out;
  }

  json to_json() const {
    json a = json::object();
    for (const auto& [p, f] : assignment) a[p] = f;
    return {{"k", k}, {"assignment", a}};
  }
};

// Sorted before shuffling, so input order never matters.
inline FoldPlan make_folds(std::vector<std::string> patients, int k, std::uint64_t seed) {
  std::sort(patients.begin(), patients.end());
  patients.erase(std::unique(patients.begin(), patients.end()), patients.end());
  if (k < 2) throw ParameterError("need at least 2 folds");
  if (patients.size() < static_cast<std::size_t>(k))
    throw ParameterError("cannot split " + std::to_string(patients.size()) + " patients into " +
                         std::to_string(k) + " folds");
  Rng rng(seed);
  rng.shuffle(patients);
  FoldPlan plan;
  plan.k = k;
  for (std::size_t i = 0; i < patients.size(); ++i)
    plan.assignment[patients[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return plan;
}

struct FoldSplit {
  std::vector<std::string> train_videos;
  std::vector<std::string> test_videos;
};

// Throws LeakageError when a patient's videos land on both sides of a split.
inline void check_no_leakage(const FoldSplit& split, const Manifest& man) {
  std::set<std::string> train;
  for (const auto& v : split.train_videos) train.insert(man.patient_of(v));
  for (const auto& v : split.test_videos)
    if (train.count(man.patient_of(v)))
      throw LeakageError("patient '" + man.patient_of(v) + "' appears in train and test");
}

inline std::vector<FoldSplit> splits_from_plan(const FoldPlan& plan,
                                               const std::vector<std::string>& videos,
                                               const Manifest& man) {
  std::vector<FoldSplit> out(static_cast<std::size_t>(plan.k));
  for (const auto& v : videos) {
    const auto& p = man.patient_of(v);
    auto it = plan.assignment.find(p);
    if (it == plan.assignment.end())
      throw LeakageError("fold plan does not cover patient '" + p + "'");
    for (int f = 0; f < plan.k; ++f) {
      auto& s = out[static_cast<std::size_t>(f)];
      (f == it->second ? s.test_videos : s.train_videos).push_back(v);
    }
  }
  return out;
}

// ---- counts and metrics -----------------------------------------------------

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::int64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp, fp += o.fp, tn += o.tn, fn += o.fn;
    return *this;
  }
  void add(bool predicted, bool actual) {
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
    else ++tn;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

using Predictions = std::map<std::pair<std::string, std::string>, bool>;  // (video, feature)

inline ConfusionCounts confusion(const Predictions& preds, const GroundTruth& truth,
                                 const std::vector<std::string>& scope, const std::string& feature) {
  ConfusionCounts c;
  for (const auto& v : scope) {
    auto p = preds.find({v, feature});
    if (p == preds.end())
      throw EvaluationError("no prediction for (" + v + ", " + feature + ")");
    auto tv = truth.find(v);
    if (tv == truth.end() || !tv->second.count(feature))
      throw EvaluationError("no ground truth for (" + v + ", " + feature + ")");
    c.add(p->second, tv->second.at(feature));
  }
  return c;
}

struct Metrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

inline double f1_score(double precision, double recall) {
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

inline Metrics metrics(const ConfusionCounts& c) {
  if (c.total() <= 0) throw EvaluationError("no evaluated pairs");
  Metrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

// ---- calibration ------------------------------------------------------------

struct Calibration {
  double threshold = 0;
  double f1 = 0;
};

// Candidates: midpoints between consecutive distinct scores plus one sentinel
// below the minimum and one above the maximum. Predictor is score >= tau; the
// best F1 wins, ties to the smallest tau.
inline Calibration calibrate_threshold(const std::vector<double>& scores,
                                       const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw CalibrationError("scores and labels differ in length");
  if (scores.empty()) throw CalibrationError("nothing to calibrate on");
  const auto positives = std::count(labels.begin(), labels.end(), true);
  if (positives == 0) throw CalibrationError("no positive labels in the training data");

  std::vector<std::pair<double, bool>> xs;
  for (std::size_t i = 0; i < scores.size(); ++i) xs.emplace_back(scores[i], labels[i]);
  std::sort(xs.begin(), xs.end(), [](auto& a, auto& b) { return a.first > b.first; });

  // Sweep tau downward: above max nothing is predicted; each distinct score
  // group crossed flips to positive.
  std::vector<double> distinct;
  for (const auto& [s, _] : xs)
    if (distinct.empty() || distinct.back() != s) distinct.push_back(s);
  const double hi = distinct.front() + 1.0, lo = distinct.back() - 1.0;

  // F1 = 2tp / (2tp + fp + fn), compared exactly as a fraction so ties are
  // never decided by rounding.
  struct Frac {
    std::int64_t num, den;
    bool operator>=(const Frac& o) const { return num * o.den >= o.num * den; }
    double value() const { return den ? double(num) / double(den) : 0.0; }
  };
  auto f1_of = [&](std::int64_t tp, std::int64_t fp) {
    const std::int64_t fn = positives - tp;
    return Frac{2 * tp, tp > 0 ? 2 * tp + fp + fn : 1};
  };

  double best_tau = hi;
  Frac best = f1_of(0, 0);
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  for (std::size_t g = 0; g < distinct.size(); ++g) {
    while (i < xs.size() && xs[i].first == distinct[g]) {
      (xs[i].second ? tp : fp) += 1;
      ++i;
    }
    const double tau = g + 1 < distinct.size() ? (distinct[g] + distinct[g + 1]) / 2 : lo;
    const Frac f = f1_of(tp, fp);
    // Descending tau: >= keeps the smaller threshold on ties.
    if (f >= best) {
      best = f;
      best_tau = tau;
    }
  }
  return {best_tau, best.value()};
}

// ---- cross-validation -------------------------------------------------------

struct ScoreKey {
  std::string video_id, feature_id;
  friend auto operator<=>(const ScoreKey&, const ScoreKey&) = default;
};
using ScoreSet = std::map<ScoreKey, double>;

struct FeatureMetrics {
  ConfusionCounts counts;
  Metrics metrics;
};

// feature -> metrics for one system
using SystemReport = std::map<std::string, FeatureMetrics>;

// Per fold and feature: calibrate on the training videos, apply to the held
// out fold; held-out predictions are pooled before computing metrics. A
// training fold with no positives predicts negative everywhere.
inline SystemReport cross_validate_scores(const ScoreSet& scores, const Manifest& man,
                                          const std::vector<std::string>& features,
                                          const FoldPlan& plan) {
  const auto videos = man.video_ids();
  const auto splits = splits_from_plan(plan, videos, man);
  for (const auto& s : splits) check_no_leakage(s, man);
  auto score_of = [&](const std::string& v, const std::string& f) {
    auto it = scores.find({v, f});
    if (it == scores.end()) throw EvaluationError("no score for (" + v + ", " + f + ")");
    return it->second;
  };
  SystemReport out;
  for (const auto& f : features) {
    Predictions preds;
    for (const auto& s : splits) {
      std::vector<double> xs;
      std::vector<bool> ys;
      for (const auto& v : s.train_videos) {
        xs.push_back(score_of(v, f));
        ys.push_back(man.truth.at(v).at(f));
      }
      std::optional<double> tau;
      if (!xs.empty() && std::count(ys.begin(), ys.end(), true) > 0)
        tau = calibrate_threshold(xs, ys).threshold;
      for (const auto& v : s.test_videos) preds[{v, f}] = tau && score_of(v, f) >= *tau;
    }
    auto c = confusion(preds, man.truth, videos, f);
    out[f] = {c, metrics(c)};
  }
  return out;
}

inline Predictions predictions_from(const std::vector<VideoVerdict>& verdicts) {
  Predictions p;
  for (const auto& v : verdicts) p[{v.video_id, v.feature_id}] = v.present;
  return p;
}

// Binary verdicts need no calibration; metrics run over every video.
inline SystemReport evaluate_verdicts(const std::vector<VideoVerdict>& verdicts, const Manifest& man,
                                      const std::vector<std::string>& features) {
  const auto preds = predictions_from(verdicts);
  const auto videos = man.video_ids();
  SystemReport out;
  for (const auto& f : features) {
    auto c = confusion(preds, man.truth, videos, f);
    out[f] = {c, metrics(c)};
  }
  return out;
}

// ---- prompt-style comparison ------------------------------------------------

struct StyleRow {
  std::string feature_id;
  std::map<PromptStyle, double> f1;
  std::map<PromptStyle, double> delta;  // vs the baseline style
  std::vector<PromptStyle> zero_f1;
};

struct StyleComparison {
  PromptStyle baseline = PromptStyle::expert;
  std::vector<PromptStyle> styles;
  std::vector<StyleRow> rows;

  json to_json() const {
    json rs = json::array();
    for (const auto& r : rows) {
      json f1 = json::object(), d = json::object(), z = json::array();
      for (const auto& [s, v] : r.f1) f1[std::string(to_string(s))] = round_to(v, 3);
      for (const auto& [s, v] : r.delta) d[std::string(to_string(s))] = round_to(v, 3);
      for (auto s : r.zero_f1) z.push_back(to_string(s));
      rs.push_back({{"feature_id", r.feature_id}, {"f1", f1}, {"delta_f1", d}, {"zero_f1", z}});
    }
    json ss = json::array();
    for (auto s : styles) ss.push_back(to_string(s));
    return {{"baseline", to_string(baseline)}, {"styles", ss}, {"rows", rs}};
  }
};

inline StyleComparison compare_prompt_styles(const std::map<PromptStyle, SystemReport>& reports,
                                             PromptStyle baseline = PromptStyle::expert) {
  if (reports.size() < 2) throw ComparisonError("need at least two prompt styles to compare");
  if (!reports.count(baseline))
    throw ComparisonError("baseline style '" + std::string(to_string(baseline)) + "' missing");
  std::set<std::string> scope;
  for (const auto& [f, _] : reports.at(baseline)) scope.insert(f);
  std::map<std::string, std::int64_t> totals;
  for (const auto& [f, m] : reports.at(baseline)) totals[f] = m.counts.total();
  for (const auto& [s, r] : reports) {
    std::set<std::string> fs_;
    for (const auto& [f, m] : r) {
      fs_.insert(f);
      if (totals.count(f) && totals[f] != m.counts.total())
        throw ComparisonError("style '" + std::string(to_string(s)) + "' evaluated a different " +
                              "number of videos for " + f);
    }
    if (fs_ != scope)
      throw ComparisonError("style '" + std::string(to_string(s)) + "' covers different features");
  }
  StyleComparison out;
  out.baseline = baseline;
  for (const auto& [s, _] : reports) out.styles.push_back(s);
  for (const auto& f : scope) {
    StyleRow row;
    row.feature_id = f;
    const double base = reports.at(baseline).at(f).metrics.f1;
    for (const auto& [s, r] : reports) {
      const double v = r.at(f).metrics.f1;
      row.f1[s] = v;
      if (s != baseline) row.delta[s] = v - base;
      if (v == 0.0) row.zero_f1.push_back(s);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace semio
