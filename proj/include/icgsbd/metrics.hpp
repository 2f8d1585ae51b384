#pragma once

// Binary classification metrics: confusion counts, accuracy/precision/recall/F1,
// MCC, ROC and AUC, plus the per-label report used for multi-label output.

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "icgsbd/features.hpp"

namespace icgsbd {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truth) {
  if (preds.size() != truth.size()) throw std::invalid_argument("confusion: length mismatch");
  if (preds.empty()) throw std::invalid_argument("confusion: empty input");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] != 0 && preds[i] != 1) || (truth[i] != 0 && truth[i] != 1)) {
      throw std::invalid_argument("confusion: values must be 0 or 1");
    }
    if (preds[i] == 1) ++(truth[i] == 1 ? cm.tp : cm.fp);
    else ++(truth[i] == 1 ? cm.fn : cm.tn);
  }
  return cm;
}

struct Scores {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  bool precision_degenerate = false, recall_degenerate = false, f1_degenerate = false;
  bool degenerate() const { return precision_degenerate || recall_degenerate || f1_degenerate; }
};

/// 0/0 ratios evaluate to 0 and raise the matching flag.
inline Scores scores(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::invalid_argument("scores: empty confusion matrix");
  auto ratio = [](double num, double den, bool& flag) {
    if (den == 0.0) {
      flag = true;
      return 0.0;
    }
    return num / den;
  };
  Scores s;
  const double tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
  const double fn = static_cast<double>(cm.fn), tn = static_cast<double>(cm.tn);
  s.accuracy = (tp + tn) / static_cast<double>(cm.total());
  s.precision = ratio(tp, tp + fp, s.precision_degenerate);
  s.recall = ratio(tp, tp + fn, s.recall_degenerate);
  s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall, s.f1_degenerate);
  return s;
}

struct MccResult {
  double value = 0.0;
  bool degenerate = false;
};

inline MccResult mcc(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::invalid_argument("mcc: empty confusion matrix");
  const double tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
  const double fn = static_cast<double>(cm.fn), tn = static_cast<double>(cm.tn);
  const double a = tp + fp, b = tp + fn, c = tn + fp, d = tn + fn;
  if (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0) return {0.0, true};
  return {(tp * tn - fp * fn) / std::sqrt(a * b * c * d), false};
}

struct RocPoint {
  double fpr;
  double tpr;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Thresholds sweep the distinct scores in descending order; equal scores
/// enter together, so tied positive/negative pairs count one half.
inline RocCurve roc(std::span<const double> score, std::span<const int> truth) {
  if (score.size() != truth.size()) throw std::invalid_argument("roc: length mismatch");
  std::size_t pos = 0;
  for (int t : truth) {
    if (t != 0 && t != 1) throw std::invalid_argument("roc: truth values must be 0 or 1");
    pos += static_cast<std::size_t>(t);
  }
  const std::size_t neg = truth.size() - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("roc: truth must contain both classes");

  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return score[a] > score[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = score[order[i]];
    for (; i < order.size() && score[order[i]] == s; ++i) ++(truth[order[i]] == 1 ? tp : fp);
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos)});
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i - 1];
    const auto& q = curve.points[i];
    curve.auc += (q.fpr - p.fpr) * (q.tpr + p.tpr) / 2.0;
  }
  return curve;
}

inline void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "fpr,tpr\n";
  for (const auto& p : curve.points) out << format_g17(p.fpr) << ',' << format_g17(p.tpr) << '\n';
}

// --- per-label report -----------------------------------------------------------

struct LabelMetrics {
  std::string name;
  ConfusionMatrix cm;
  Scores scores;
  MccResult mcc;
  std::optional<RocCurve> roc;  // absent when the truth column has a single class
};

struct MetricsReport {
  std::string scenario;
  std::size_t examples = 0;
  double exact_match_accuracy = 0.0;
  std::vector<LabelMetrics> labels;
  std::optional<double> mean_auc;  // unweighted mean over labels with a ROC curve
};

/// One-vs-rest metrics for each label column. `probs`, `preds` and `truth`
/// are row-major with one row per example and `names.size()` columns.
inline MetricsReport evaluate_labels(const std::vector<std::string>& names, const std::vector<std::vector<double>>& probs,
                                     const std::vector<std::vector<int>>& preds,
                                     const std::vector<std::vector<int>>& truth, const std::string& scenario) {
  if (probs.size() != truth.size() || preds.size() != truth.size()) {
    throw std::invalid_argument("evaluate_labels: row count mismatch");
  }
  if (truth.empty()) throw std::invalid_argument("evaluate_labels: no examples");
  MetricsReport report;
  report.scenario = scenario;
  report.examples = truth.size();
  std::size_t exact = 0;
  for (std::size_t r = 0; r < truth.size(); ++r) {
    if (probs[r].size() != names.size() || preds[r].size() != names.size() || truth[r].size() != names.size()) {
      throw std::invalid_argument("evaluate_labels: column count mismatch in row " + std::to_string(r));
    }
    exact += preds[r] == truth[r];
  }
  report.exact_match_accuracy = static_cast<double>(exact) / static_cast<double>(truth.size());
  double auc_sum = 0.0;
  std::size_t auc_count = 0;
  for (std::size_t c = 0; c < names.size(); ++c) {
    std::vector<double> p;
    std::vector<int> y, t;
    for (std::size_t r = 0; r < truth.size(); ++r) {
      p.push_back(probs[r][c]);
      y.push_back(preds[r][c]);
      t.push_back(truth[r][c]);
    }
    LabelMetrics m;
    m.name = names[c];
    m.cm = confusion(y, t);
    m.scores = scores(m.cm);
    m.mcc = mcc(m.cm);
    if (std::count(t.begin(), t.end(), 1) > 0 && std::count(t.begin(), t.end(), 0) > 0) {
      m.roc = roc(p, t);
      auc_sum += m.roc->auc;
      ++auc_count;
    }
    report.labels.push_back(std::move(m));
  }
  if (auc_count) report.mean_auc = auc_sum / static_cast<double>(auc_count);
  return report;
}

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["examples"] = r.examples;
  j["exact_match_accuracy"] = r.exact_match_accuracy;
  j["mean_auc"] = r.mean_auc ? nlohmann::ordered_json(*r.mean_auc) : nlohmann::ordered_json(nullptr);
  auto& labels = j["labels"] = nlohmann::ordered_json::array();
  for (const auto& m : r.labels) {
    nlohmann::ordered_json l;
    l["label"] = m.name;
    l["confusion"] = {{"tp", m.cm.tp}, {"fp", m.cm.fp}, {"fn", m.cm.fn}, {"tn", m.cm.tn}};
    l["accuracy"] = m.scores.accuracy;
    l["precision"] = m.scores.precision;
    l["recall"] = m.scores.recall;
    l["f1"] = m.scores.f1;
    l["mcc"] = m.mcc.value;
    l["auc"] = m.roc ? nlohmann::ordered_json(m.roc->auc) : nlohmann::ordered_json(nullptr);
    l["degenerate"] = {{"precision", m.scores.precision_degenerate},
                       {"recall", m.scores.recall_degenerate},
                       {"f1", m.scores.f1_degenerate},
                       {"mcc", m.mcc.degenerate}};
    labels.push_back(std::move(l));
  }
  return j;
}

/// Fixed-width text table, one row per label.
inline void write_label_table(std::ostream& out, const MetricsReport& r) {
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %9s %9s %9s %9s %9s %9s\n", "label", "accuracy", "precision", "recall", "f1",
                "mcc", "auc");
  out << line;
  for (const auto& m : r.labels) {
    char auc[16] = "-";
    if (m.roc) std::snprintf(auc, sizeof auc, "%.4f", m.roc->auc);
    std::snprintf(line, sizeof line, "%-6s %9.4f %9.4f %9.4f %9.4f %9.4f %9s\n", m.name.c_str(), m.scores.accuracy,
                  m.scores.precision, m.scores.recall, m.scores.f1, m.mcc.value, auc);
    out << line;
  }
}

}  // namespace icgsbd
