#pragma once

// Known/unknown partitioning, median-threshold labels and the iterative
// classify-discard-rethreshold loop with oracle budget accounting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "icgsbd/features.hpp"
#include "icgsbd/gnn.hpp"

namespace icgsbd {

/// Members are positions into the id list given to `split`, sorted ascending.
struct Partition {
  std::vector<std::size_t> known, unknown, training, validation;
};

/// Splits `items` into train/validation with `train_fraction` rounded to the
/// nearest count, seeded. Both outputs are sorted.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_validation_split(
    std::vector<std::size_t> items, double train_fraction, std::mt19937_64& rng) {
  std::sort(items.begin(), items.end());
  std::shuffle(items.begin(), items.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(items.size())));
  n_train = std::clamp<std::size_t>(n_train, std::min<std::size_t>(1, items.size()), items.size());
  std::vector<std::size_t> train(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> val(items.begin() + static_cast<std::ptrdiff_t>(n_train), items.end());
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {train, val};
}

inline Partition split(std::size_t count, double known_fraction, std::uint64_t seed, double train_fraction = 0.8) {
  if (!(known_fraction > 0.0 && known_fraction < 1.0)) throw std::invalid_argument("split: fraction must lie in (0,1)");
  const auto n_known = static_cast<std::size_t>(std::llround(known_fraction * static_cast<double>(count)));
  if (n_known == 0 || n_known >= count) {
    throw std::invalid_argument("split: fraction " + std::to_string(known_fraction) + " of " + std::to_string(count) +
                                " leaves the known or unknown set empty");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> all(count);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::shuffle(all.begin(), all.end(), rng);
  Partition p;
  p.known.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_known));
  p.unknown.assign(all.begin() + static_cast<std::ptrdiff_t>(n_known), all.end());
  std::sort(p.known.begin(), p.known.end());
  std::sort(p.unknown.begin(), p.unknown.end());
  std::tie(p.training, p.validation) = train_validation_split(p.known, train_fraction, rng);
  return p;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

struct MedianLabels {
  double threshold = 0.0;
  std::vector<int> labels;  // 1 = J <= threshold (lower J is better)
  bool degenerate = false;  // every J equal, so every label is 1
};

inline MedianLabels median_label(std::span<const double> j) {
  if (j.empty()) throw std::invalid_argument("median_label: empty input");
  for (double v : j) {
    if (!std::isfinite(v)) throw std::invalid_argument("median_label: non-finite J");
  }
  MedianLabels out;
  out.threshold = median({j.begin(), j.end()});
  for (double v : j) out.labels.push_back(v <= out.threshold ? 1 : 0);
  out.degenerate = std::all_of(j.begin(), j.end(), [&](double v) { return v == j.front(); });
  return out;
}

/// A binary good/bad classifier over catalog positions.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(std::span<const std::size_t> training, std::span<const int> training_labels,
                   std::span<const std::size_t> validation, std::span<const int> validation_labels, double threshold,
                   std::uint64_t seed) = 0;
  virtual std::vector<int> predict(std::span<const std::size_t> items) = 0;
};

/// Predicts label 1 exactly when the true J is within the last fitted threshold.
class PerfectClassifier : public Classifier {
 public:
  explicit PerfectClassifier(std::vector<double> truth) : truth_(std::move(truth)) {}
  void fit(std::span<const std::size_t>, std::span<const int>, std::span<const std::size_t>, std::span<const int>,
           double threshold, std::uint64_t) override {
    threshold_ = threshold;
  }
  std::vector<int> predict(std::span<const std::size_t> items) override {
    std::vector<int> out;
    for (auto i : items) out.push_back(truth_[i] <= threshold_ ? 1 : 0);
    return out;
  }

 private:
  std::vector<double> truth_;
  double threshold_ = 0.0;
};

/// Binary GNN retrained from a fresh seeded initialisation on every fit.
class GnnClassifier : public Classifier {
 public:
  GnnClassifier(const std::vector<Graph>& graphs, const std::vector<Eigen::MatrixXd>& features, TrainConfig cfg)
      : graphs_(&graphs), features_(&features), cfg_(cfg) {
    cfg_.scenario = Scenario::Binary;
  }

  void fit(std::span<const std::size_t> training, std::span<const int> training_labels,
           std::span<const std::size_t> validation, std::span<const int> validation_labels, double,
           std::uint64_t seed) override {
    auto samples = [&](std::span<const std::size_t> idx, std::span<const int> labels) {
      std::vector<Sample> out;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        out.push_back({&(*graphs_)[idx[i]], (*features_)[idx[i]], LabelArray::binary(labels[i])});
      }
      return out;
    };
    auto cfg = cfg_;
    cfg.seed = seed;
    auto result = train(samples(training, training_labels), samples(validation, validation_labels), cfg);
    model_ = std::move(result.model);
    history_ = std::move(result.history);
  }

  std::vector<int> predict(std::span<const std::size_t> items) override {
    if (!model_) throw std::logic_error("GnnClassifier: predict before fit");
    std::vector<int> out;
    for (auto i : items) out.push_back(icgsbd::predict(*model_, (*graphs_)[i], (*features_)[i]).label.binary_class());
    return out;
  }

  const std::vector<HistoryRow>& history() const { return history_; }

 private:
  const std::vector<Graph>* graphs_;
  const std::vector<Eigen::MatrixXd>* features_;
  TrainConfig cfg_;
  std::optional<Model> model_;
  std::vector<HistoryRow> history_;
};

struct KnownItem {
  std::size_t index;
  double j;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t known_size = 0;
  std::size_t unknown_size = 0;
  double known_median = 0.0;
  bool median_degenerate = false;
  std::size_t known1_size = 0;
  double known1_median = 0.0;
  std::size_t predicted1_size = 0;
  std::optional<double> predicted1_median;  // from ground truth, for reporting only
  std::size_t predicted0_size = 0;
  std::size_t supplements = 0;
  std::size_t next_known_size = 0;
  std::size_t next_unknown_size = 0;
  double next_threshold = 0.0;
};

struct IterationState {
  std::size_t k = 0;
  std::vector<KnownItem> known;
  std::vector<std::size_t> unknown;
  double threshold = 0.0;
  std::size_t budget_spent = 0;
  std::size_t supplements = 0;
  bool truncated = false;     // Predicted-1 ran out before the minimum known size
  bool stopped_early = false; // nothing left to classify, or too few known graphs
  std::vector<IterationRecord> history;

  std::vector<std::size_t> retained() const {
    std::vector<std::size_t> out(unknown);
    for (const auto& k : known) out.push_back(k.index);
    std::sort(out.begin(), out.end());
    return out;
  }
};

using Oracle = std::function<double(std::size_t)>;

inline constexpr std::size_t kMinKnownForIteration = 4;

/// One pass: label known by median, train, predict unknown, discard the
/// predicted/known bad halves, top up the known set from Predicted-1 with
/// fresh oracle evaluations, and re-threshold. `truth`, when given, is used
/// only to report the Predicted-1 median.
inline IterationState run_iteration(const IterationState& state, Classifier& classifier, const Oracle& oracle,
                                    std::size_t min_known, std::mt19937_64& rng,
                                    const std::vector<double>* truth = nullptr) {
  if (state.known.size() < kMinKnownForIteration) {
    throw std::invalid_argument("run_iteration: need at least " + std::to_string(kMinKnownForIteration) +
                                " known graphs");
  }
  IterationRecord rec;
  rec.iteration = state.k + 1;
  rec.known_size = state.known.size();
  rec.unknown_size = state.unknown.size();

  std::vector<double> j;
  std::vector<std::size_t> known_idx;
  for (const auto& k : state.known) {
    j.push_back(k.j);
    known_idx.push_back(k.index);
  }
  const auto labels = median_label(j);
  rec.known_median = labels.threshold;
  rec.median_degenerate = labels.degenerate;
  std::map<std::size_t, int> label_of;
  for (std::size_t i = 0; i < known_idx.size(); ++i) label_of[known_idx[i]] = labels.labels[i];

  auto [train_idx, val_idx] = train_validation_split(known_idx, 0.8, rng);
  auto labels_for = [&](const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    for (auto i : idx) out.push_back(label_of[i]);
    return out;
  };
  classifier.fit(train_idx, labels_for(train_idx), val_idx, labels_for(val_idx), labels.threshold, rng());
  const auto preds = classifier.predict(state.unknown);

  std::vector<std::size_t> predicted1;
  for (std::size_t i = 0; i < state.unknown.size(); ++i) {
    if (preds[i] == 1) predicted1.push_back(state.unknown[i]);
  }
  rec.predicted1_size = predicted1.size();
  rec.predicted0_size = state.unknown.size() - predicted1.size();
  if (truth && !predicted1.empty()) {
    std::vector<double> pj;
    for (auto i : predicted1) pj.push_back((*truth)[i]);
    rec.predicted1_median = median(pj);
  }

  IterationState next;
  next.k = state.k + 1;
  next.budget_spent = state.budget_spent;
  next.supplements = state.supplements;
  next.history = state.history;
  for (const auto& k : state.known) {
    if (k.j <= labels.threshold) next.known.push_back(k);
  }
  rec.known1_size = next.known.size();
  {
    std::vector<double> k1;
    for (const auto& k : next.known) k1.push_back(k.j);
    rec.known1_median = median(k1);
  }

  if (next.known.size() < min_known) {
    std::shuffle(predicted1.begin(), predicted1.end(), rng);
    while (next.known.size() < min_known && !predicted1.empty()) {
      const auto pick = predicted1.back();
      predicted1.pop_back();
      next.known.push_back({pick, oracle(pick)});
      ++next.budget_spent;
      ++next.supplements;
      ++rec.supplements;
    }
    if (next.known.size() < min_known) next.truncated = true;
    std::sort(predicted1.begin(), predicted1.end());
  }
  std::sort(next.known.begin(), next.known.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  next.unknown = std::move(predicted1);
  std::vector<double> nj;
  for (const auto& k : next.known) nj.push_back(k.j);
  next.threshold = median(nj);
  next.stopped_early = next.unknown.empty() || next.truncated;

  rec.next_known_size = next.known.size();
  rec.next_unknown_size = next.unknown.size();
  rec.next_threshold = next.threshold;
  next.history.push_back(rec);
  return next;
}

struct IterateConfig {
  double known_fraction = 0.4;
  std::size_t iterations = 3;
  std::optional<std::size_t> min_known;  // default ceil(0.10 * catalog size)
  std::uint64_t seed = 0;
};

inline std::size_t default_min_known(std::size_t catalog_size) {
  return static_cast<std::size_t>(std::ceil(0.10 * static_cast<double>(catalog_size)));
}

/// Catalog positions of the k best graphs: ascending J, ties by id.
inline std::vector<std::size_t> top_k(const std::vector<std::string>& ids, const std::vector<double>& truth,
                                      std::size_t k) {
  if (k > ids.size()) throw std::invalid_argument("top_k: k exceeds catalog size");
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return truth[a] != truth[b] ? truth[a] < truth[b] : ids[a] < ids[b];
  });
  order.resize(k);
  return order;
}

inline std::size_t topk_recall(const std::vector<std::size_t>& retained, const std::vector<std::string>& ids,
                               const std::vector<double>& truth, std::size_t k) {
  auto best = top_k(ids, truth, k);
  std::sort(best.begin(), best.end());
  std::vector<std::size_t> r(retained);
  std::sort(r.begin(), r.end());
  std::vector<std::size_t> both;
  std::set_intersection(best.begin(), best.end(), r.begin(), r.end(), std::back_inserter(both));
  return both.size();
}

struct FinalReport {
  std::size_t catalog_size = 0;
  std::size_t initial_known = 0;
  std::size_t min_known = 0;
  std::size_t budget_spent = 0;
  std::size_t supplements = 0;
  bool truncated = false;
  bool stopped_early = false;
  std::vector<IterationRecord> iterations;
  std::vector<std::size_t> retained;
  std::map<std::size_t, std::size_t> topk;  // k -> retained members of the best k
};

/// Runs up to cfg.iterations passes over the catalog positions 0..ids.size()-1.
/// The initial known set is evaluated through `oracle` and counts against the
/// budget. `truth` (full ground truth, optional) feeds reporting only.
inline FinalReport run(const std::vector<std::string>& ids, const Oracle& oracle, Classifier& classifier,
                       const IterateConfig& cfg, const std::vector<double>* truth = nullptr) {
  if (cfg.iterations < 1) throw std::invalid_argument("run: iterations must be >= 1");
  FinalReport report;
  report.catalog_size = ids.size();
  report.min_known = cfg.min_known.value_or(default_min_known(ids.size()));
  const auto part = split(ids.size(), cfg.known_fraction, cfg.seed);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  IterationState state;
  for (auto i : part.known) state.known.push_back({i, oracle(i)});
  state.unknown = part.unknown;
  state.budget_spent = state.known.size();
  report.initial_known = state.known.size();
  {
    std::vector<double> j;
    for (const auto& k : state.known) j.push_back(k.j);
    state.threshold = median(j);
  }
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    if (state.known.size() < kMinKnownForIteration) {
      state.stopped_early = true;
      break;
    }
    state = run_iteration(state, classifier, oracle, report.min_known, rng, truth);
    if (state.stopped_early) break;
  }
  report.budget_spent = state.budget_spent;
  report.supplements = state.supplements;
  report.truncated = state.truncated;
  report.stopped_early = state.stopped_early;
  report.iterations = state.history;
  report.retained = state.retained();
  if (truth) {
    for (std::size_t k : {10, 100, 200}) {
      if (k <= ids.size()) report.topk[k] = topk_recall(report.retained, ids, *truth, k);
    }
  }
  return report;
}

inline nlohmann::ordered_json to_json(const FinalReport& r, const std::vector<std::string>& ids) {
  nlohmann::ordered_json j;
  j["catalog_size"] = r.catalog_size;
  j["initial_known"] = r.initial_known;
  j["min_known"] = r.min_known;
  j["budget_spent"] = r.budget_spent;
  j["supplements"] = r.supplements;
  j["truncated"] = r.truncated;
  j["stopped_early"] = r.stopped_early;
  j["retained_count"] = r.retained.size();
  auto& its = j["iterations"] = nlohmann::ordered_json::array();
  for (const auto& rec : r.iterations) {
    its.push_back({{"iteration", rec.iteration},
                   {"known_size", rec.known_size},
                   {"unknown_size", rec.unknown_size},
                   {"known_median", rec.known_median},
                   {"median_degenerate", rec.median_degenerate},
                   {"known1_size", rec.known1_size},
                   {"known1_median", rec.known1_median},
                   {"predicted1_size", rec.predicted1_size},
                   {"predicted1_median", rec.predicted1_median ? nlohmann::ordered_json(*rec.predicted1_median)
                                                               : nlohmann::ordered_json(nullptr)},
                   {"predicted0_size", rec.predicted0_size},
                   {"supplements", rec.supplements},
                   {"next_known_size", rec.next_known_size},
                   {"next_unknown_size", rec.next_unknown_size},
                   {"next_threshold", rec.next_threshold}});
  }
  auto& topk = j["topk_recall"] = nlohmann::ordered_json::object();
  for (auto [k, c] : r.topk) topk[std::to_string(k)] = c;
  auto& retained = j["retained"] = nlohmann::ordered_json::array();
  for (auto i : r.retained) retained.push_back(ids[i]);
  return j;
}

/// `iteration,set,median,size` rows for the known, Known-1 and Predicted-1 sets.
inline void write_medians_csv(std::ostream& out, const FinalReport& r) {
  out << "iteration,set,median,size\n";
  for (const auto& rec : r.iterations) {
    out << rec.iteration << ",known," << format_g17(rec.known_median) << ',' << rec.known_size << '\n';
    out << rec.iteration << ",known1," << format_g17(rec.known1_median) << ',' << rec.known1_size << '\n';
    out << rec.iteration << ",predicted1,"
        << (rec.predicted1_median ? format_g17(*rec.predicted1_median) : std::string("nan")) << ','
        << rec.predicted1_size << '\n';
  }
}

}  // namespace icgsbd
