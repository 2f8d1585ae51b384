#pragma once

// File-based pipeline stages: generate, featurize, train, predict, metrics and
// iterate. Every stage reads and writes files inside one output directory.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "icgsbd/catalog.hpp"
#include "icgsbd/config.hpp"
#include "icgsbd/features.hpp"
#include "icgsbd/gnn.hpp"
#include "icgsbd/iterclass.hpp"
#include "icgsbd/metrics.hpp"
#include "icgsbd/nsc.hpp"

namespace icgsbd {

/// Missing or corrupt stage input; names the stage and the file.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& stage, const std::string& file, const std::string& what)
      : std::runtime_error("[" + stage + "] " + file + ": " + what), stage_(stage), file_(file) {}
  const std::string& stage() const { return stage_; }
  const std::string& file() const { return file_; }

 private:
  std::string stage_, file_;
};

/// Spectral power iteration failed to converge on some graph.
class ConvergenceWarning : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 0;
  CatalogSpec catalog;
  NscConfig nsc = NscConfig::tms_default();
  OracleParams oracle;
  double known_fraction = 0.1;
  double train_fraction = 0.8;
  bool use_pca = true;
  std::size_t pca_k = 1;
  TrainConfig train;
  double iterate_known_fraction = 0.4;
  std::size_t iterations = 3;
  std::optional<std::size_t> min_known;
  bool strict = false;

  /// Keys: seed; catalog.* and nsc.* (see CatalogSpec/NscConfig); oracle.weights;
  /// split.known_fraction, split.train_fraction; features.use_pca, features.pca_k;
  /// train.epochs, train.batch_size, train.learning_rate, train.dropout,
  /// train.hidden, train.scenario; iterate.known_fraction, iterate.iterations,
  /// iterate.min_known.
  static RunConfig from_config(const KeyValueConfig& kv) {
    RunConfig c;
    c.seed = kv.get_u64("seed", c.seed);
    c.catalog = CatalogSpec::from_config(kv);
    c.nsc = NscConfig::from_config(kv);
    if (auto w = kv.get("oracle.weights")) {
      const auto items = split_list(*w);
      if (items.size() != 5) throw ConfigError("oracle.weights needs exactly 5 values");
      for (std::size_t i = 0; i < 5; ++i) {
        KeyValueConfig one;
        one.set("w", items[i]);
        c.oracle.weights[i] = one.get_double("w", 0.0);
      }
    }
    c.known_fraction = kv.get_double("split.known_fraction", c.known_fraction);
    c.train_fraction = kv.get_double("split.train_fraction", c.train_fraction);
    c.use_pca = kv.get_bool("features.use_pca", c.use_pca);
    c.pca_k = static_cast<std::size_t>(kv.get_u64("features.pca_k", c.pca_k));
    c.train.epochs = static_cast<std::size_t>(kv.get_u64("train.epochs", c.train.epochs));
    c.train.batch_size = static_cast<std::size_t>(kv.get_u64("train.batch_size", c.train.batch_size));
    c.train.learning_rate = kv.get_double("train.learning_rate", c.train.learning_rate);
    c.train.dropout = kv.get_double("train.dropout", c.train.dropout);
    c.train.hidden = static_cast<std::size_t>(kv.get_u64("train.hidden", c.train.hidden));
    try {
      c.train.scenario = parse_scenario(kv.get_string("train.scenario", std::string(to_string(c.train.scenario))));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("train.scenario: ") + e.what());
    }
    c.iterate_known_fraction = kv.get_double("iterate.known_fraction", c.iterate_known_fraction);
    c.iterations = static_cast<std::size_t>(kv.get_u64("iterate.iterations", c.iterations));
    if (kv.has("iterate.min_known")) c.min_known = static_cast<std::size_t>(kv.get_u64("iterate.min_known", 0));
    c.validate();
    return c;
  }

  void validate() const {
    catalog.check();
    nsc.check();
    auto fraction = [](double f, const char* key) {
      if (!(f > 0.0 && f < 1.0)) throw ConfigError(std::string(key) + " must lie in (0,1)");
    };
    fraction(known_fraction, "split.known_fraction");
    fraction(train_fraction, "split.train_fraction");
    fraction(iterate_known_fraction, "iterate.known_fraction");
    if (pca_k < 1 || pca_k > 4) throw ConfigError("features.pca_k must lie in 1..4");
    if (train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (train.hidden < 1) throw ConfigError("train.hidden must be >= 1");
    if (!(train.learning_rate >= 0.0)) throw ConfigError("train.learning_rate must be >= 0");
    if (!(train.dropout >= 0.0 && train.dropout < 1.0)) throw ConfigError("train.dropout must lie in [0,1)");
    if (iterations < 1) throw ConfigError("iterate.iterations must be >= 1");
  }

  TrainConfig train_config() const {
    TrainConfig t = train;
    t.seed = seed;
    return t;
  }
};

namespace files {
inline constexpr const char* kCatalog = "catalog.jsonl";
inline constexpr const char* kManifest = "manifest.csv";
inline constexpr const char* kSplit = "split.csv";
inline constexpr const char* kFeatures = "features.csv";
inline constexpr const char* kPca = "pca.txt";
inline constexpr const char* kModel = "model.ckpt";
inline constexpr const char* kHistory = "history.csv";
inline constexpr const char* kPredictions = "predictions.csv";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kMetricsTable = "metrics_table.txt";
inline constexpr const char* kIterateReport = "iterate_report.json";
inline constexpr const char* kMedians = "medians.csv";
inline constexpr const char* kRetained = "retained.txt";
}  // namespace files

namespace detail {

inline std::string path_in(const std::filesystem::path& dir, const char* name) { return (dir / name).string(); }

inline std::ofstream open_out(const std::string& stage, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(stage, path, "cannot open for writing");
  return out;
}

inline std::ifstream open_in(const std::string& stage, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(stage, path, "missing or unreadable");
  return in;
}

inline std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& stage, const std::string& file, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw DataError(stage, file, "row " + std::to_string(row) + ": bad number '" + s + "'");
}

}  // namespace detail

/// Catalog and manifest read back together, rows aligned by position.
struct Dataset {
  std::vector<Graph> graphs;
  Manifest manifest;
  std::map<std::string, std::size_t> index;  // graph id -> position
};

inline Dataset load_dataset(const std::filesystem::path& dir, const std::string& stage) {
  Dataset d;
  const auto cat_path = detail::path_in(dir, files::kCatalog);
  const auto man_path = detail::path_in(dir, files::kManifest);
  try {
    d.graphs = read_catalog_file(cat_path);
  } catch (const std::exception& e) {
    throw DataError(stage, cat_path, e.what());
  }
  try {
    d.manifest = read_manifest_file(man_path);
  } catch (const std::exception& e) {
    throw DataError(stage, man_path, e.what());
  }
  if (d.manifest.size() != d.graphs.size()) throw DataError(stage, man_path, "row count differs from the catalog");
  for (std::size_t i = 0; i < d.graphs.size(); ++i) {
    if (d.manifest[i].graph_id != d.graphs[i].id()) {
      throw DataError(stage, man_path, "row " + std::to_string(i + 1) + " id '" + d.manifest[i].graph_id +
                                           "' does not match catalog id '" + d.graphs[i].id() + "'");
    }
    d.index[d.graphs[i].id()] = i;
  }
  return d;
}

// --- generate -------------------------------------------------------------------

struct GenerateSummary {
  std::size_t graphs = 0, compiles = 0, simulates = 0;
};

inline GenerateSummary run_generate(const RunConfig& cfg, const std::filesystem::path& dir) {
  const auto graphs = enumerate_catalog(cfg.catalog, cfg.nsc);
  const auto manifest = evaluate_catalog(graphs, cfg.oracle, cfg.nsc);
  {
    auto out = detail::open_out("generate", detail::path_in(dir, files::kCatalog));
    write_catalog(out, graphs);
  }
  {
    auto out = detail::open_out("generate", detail::path_in(dir, files::kManifest));
    write_manifest(out, manifest);
  }
  GenerateSummary s{graphs.size(), 0, 0};
  for (const auto& r : manifest) {
    s.compiles += r.outcome.compiles;
    s.simulates += r.outcome.simulates;
  }
  return s;
}

// --- featurize ------------------------------------------------------------------

/// Graphs taking part in a scenario: all of them for multi-label, only the
/// simulatable ones (which carry J) for binary.
inline std::vector<std::size_t> scenario_population(const Dataset& d, Scenario s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.graphs.size(); ++i) {
    if (s == Scenario::MultiLabel || d.manifest[i].outcome.simulates) out.push_back(i);
  }
  return out;
}

struct FeaturizeSummary {
  std::size_t population = 0, training = 0, validation = 0, unknown = 0;
  std::size_t nonconverged = 0;
  std::optional<PcaModel> pca;
};

inline FeaturizeSummary run_featurize(const RunConfig& cfg, const std::filesystem::path& dir) {
  const std::string stage = "featurize";
  const auto d = load_dataset(dir, stage);
  const auto pop = scenario_population(d, cfg.train.scenario);
  Partition part;
  try {
    part = split(pop.size(), cfg.known_fraction, cfg.seed, cfg.train_fraction);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("split: ") + e.what());
  }
  FeaturizeSummary s;
  s.population = pop.size();
  s.training = part.training.size();
  s.validation = part.validation.size();
  s.unknown = part.unknown.size();

  std::vector<NodeMetrics> metrics;
  for (auto i : pop) {
    metrics.push_back(compute_node_metrics(d.graphs[i]));
    if (!metrics.back().spectral_converged) ++s.nonconverged;
  }
  if (s.nonconverged && cfg.strict) {
    throw ConvergenceWarning(std::to_string(s.nonconverged) + " graph(s) did not converge in power iteration");
  }
  Eigen::MatrixXd scores;
  std::vector<MetricRow> all_rows;
  for (const auto& m : metrics) {
    for (const auto& r : m.rows()) all_rows.push_back(r);
  }
  if (cfg.use_pca) {
    std::vector<MetricRow> rows;
    for (auto p : part.training) {
      for (const auto& r : metrics[p].rows()) rows.push_back(r);
    }
    s.pca = pca_fit(rows, cfg.pca_k);
    scores = pca_transform(*s.pca, all_rows);
    auto out = detail::open_out(stage, detail::path_in(dir, files::kPca));
    write_pca_model(out, *s.pca);
  }

  {
    std::vector<std::string> set_of(pop.size());
    for (auto p : part.training) set_of[p] = "training";
    for (auto p : part.validation) set_of[p] = "validation";
    for (auto p : part.unknown) set_of[p] = "unknown";
    auto out = detail::open_out(stage, detail::path_in(dir, files::kSplit));
    out << "graph_id,set\n";
    for (std::size_t p = 0; p < pop.size(); ++p) out << d.graphs[pop[p]].id() << ',' << set_of[p] << '\n';
  }
  {
    auto out = detail::open_out(stage, detail::path_in(dir, files::kFeatures));
    out << "graph_id,node_idx,label,harmonic,betweenness,eigenvector,spectral_radius";
    for (std::size_t k = 0; k < (cfg.use_pca ? cfg.pca_k : 0); ++k) out << ",pc" << k + 1;
    out << '\n';
    Eigen::Index row = 0;
    for (std::size_t p = 0; p < pop.size(); ++p) {
      const auto& g = d.graphs[pop[p]];
      const auto rows = metrics[p].rows();
      for (std::size_t v = 0; v < g.size(); ++v, ++row) {
        out << g.id() << ',' << v << ',' << to_string(g.label(v));
        for (double x : rows[v]) out << ',' << format_g17(x);
        for (Eigen::Index k = 0; k < scores.cols(); ++k) out << ',' << format_g17(scores(row, k));
        out << '\n';
      }
    }
  }
  return s;
}

/// split.csv as id -> set name, in file order.
inline std::vector<std::pair<std::string, std::string>> load_split(const std::filesystem::path& dir,
                                                                   const std::string& stage) {
  const auto path = detail::path_in(dir, files::kSplit);
  auto in = detail::open_in(stage, path);
  std::string line;
  if (!std::getline(in, line) || line != "graph_id,set") throw DataError(stage, path, "bad header");
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto f = detail::csv_fields(line);
    if (f.size() != 2 || (f[1] != "training" && f[1] != "validation" && f[1] != "unknown")) {
      throw DataError(stage, path, "row " + std::to_string(row) + ": malformed");
    }
    out.emplace_back(f[0], f[1]);
  }
  return out;
}

/// Per-graph feature matrices rebuilt from features.csv: encoded label plus
/// the first PCA score when present.
inline std::map<std::string, Eigen::MatrixXd> load_features(const std::filesystem::path& dir,
                                                            const std::string& stage) {
  const auto path = detail::path_in(dir, files::kFeatures);
  auto in = detail::open_in(stage, path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(stage, path, "empty file");
  const auto header = detail::csv_fields(line);
  if (header.size() < 7 || header[0] != "graph_id" || header[6] != "spectral_radius") {
    throw DataError(stage, path, "bad header");
  }
  const bool has_pc = header.size() >= 8;
  std::map<std::string, std::vector<std::pair<double, double>>> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto f = detail::csv_fields(line);
    if (f.size() != header.size()) throw DataError(stage, path, "row " + std::to_string(row) + ": wrong field count");
    auto& g = rows[f[0]];
    if (std::to_string(g.size()) != f[1]) {
      throw DataError(stage, path, "row " + std::to_string(row) + ": node_idx out of sequence");
    }
    VertexLabel label;
    try {
      label = parse_label(f[2]);
    } catch (const std::invalid_argument& e) {
      throw DataError(stage, path, "row " + std::to_string(row) + ": " + e.what());
    }
    g.emplace_back(encode_label(label), has_pc ? detail::parse_double(f[7], stage, path, row) : 0.0);
  }
  std::map<std::string, Eigen::MatrixXd> out;
  for (const auto& [id, r] : rows) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(r.size()), has_pc ? 2 : 1);
    for (std::size_t i = 0; i < r.size(); ++i) {
      x(static_cast<Eigen::Index>(i), 0) = r[i].first;
      if (has_pc) x(static_cast<Eigen::Index>(i), 1) = r[i].second;
    }
    out.emplace(id, std::move(x));
  }
  return out;
}

// --- train ----------------------------------------------------------------------

struct StagedSets {
  Dataset data;
  std::vector<std::size_t> training, validation, unknown;  // dataset positions
  std::map<std::string, Eigen::MatrixXd> features;
};

inline StagedSets load_staged(const std::filesystem::path& dir, const std::string& stage) {
  StagedSets s{load_dataset(dir, stage), {}, {}, {}, load_features(dir, stage)};
  const auto split_path = detail::path_in(dir, files::kSplit);
  for (const auto& [id, set] : load_split(dir, stage)) {
    auto it = s.data.index.find(id);
    if (it == s.data.index.end()) throw DataError(stage, split_path, "unknown graph id '" + id + "'");
    const auto f = s.features.find(id);
    if (f == s.features.end()) {
      throw DataError(stage, detail::path_in(dir, files::kFeatures), "no rows for graph '" + id + "'");
    }
    if (static_cast<std::size_t>(f->second.rows()) != s.data.graphs[it->second].size()) {
      throw DataError(stage, detail::path_in(dir, files::kFeatures), "row count mismatch for graph '" + id + "'");
    }
    (set == "training" ? s.training : set == "validation" ? s.validation : s.unknown).push_back(it->second);
  }
  return s;
}

/// Median J of the known (training + validation) set, the binary threshold.
inline double known_median(const StagedSets& s, const std::string& stage) {
  std::vector<double> j;
  for (const auto* set : {&s.training, &s.validation}) {
    for (auto i : *set) {
      const auto& o = s.data.manifest[i].outcome;
      if (!o.j_value) throw DataError(stage, files::kSplit, "graph '" + s.data.graphs[i].id() + "' has no J");
      j.push_back(*o.j_value);
    }
  }
  return median(j);
}

inline LabelArray truth_label(const Dataset& d, std::size_t i, Scenario s, std::optional<double> threshold) {
  const auto& o = d.manifest[i].outcome;
  if (s == Scenario::MultiLabel) return LabelArray::multi_label(o.compiles, o.simulates);
  if (!o.j_value) throw std::invalid_argument("graph '" + d.graphs[i].id() + "' has no J");
  return LabelArray::binary(*o.j_value <= *threshold ? 1 : 0);
}

inline TrainResult run_train(const RunConfig& cfg, const std::filesystem::path& dir) {
  const std::string stage = "train";
  const auto s = load_staged(dir, stage);
  if (s.training.empty()) throw DataError(stage, detail::path_in(dir, files::kSplit), "no training graphs");
  std::optional<double> threshold;
  if (cfg.train.scenario == Scenario::Binary) threshold = known_median(s, stage);
  auto samples = [&](const std::vector<std::size_t>& idx) {
    std::vector<Sample> out;
    for (auto i : idx) {
      const auto& g = s.data.graphs[i];
      LabelArray label;
      try {
        label = truth_label(s.data, i, cfg.train.scenario, threshold);
      } catch (const std::invalid_argument& e) {
        throw DataError(stage, detail::path_in(dir, files::kManifest), e.what());
      }
      out.push_back({&g, s.features.at(g.id()), label});
    }
    return out;
  };
  auto result = train(samples(s.training), samples(s.validation), cfg.train_config());
  {
    auto out = detail::open_out(stage, detail::path_in(dir, files::kModel));
    const bool has_pca = std::filesystem::exists(dir / files::kPca) && result.model.config.input_dim > 1;
    write_checkpoint(out, result.model, {has_pca ? files::kPca : "", threshold});
  }
  {
    auto out = detail::open_out(stage, detail::path_in(dir, files::kHistory));
    out << "epoch,train_loss,val_accuracy\n";
    for (const auto& h : result.history) {
      out << h.epoch << ',' << format_g17(h.train_loss) << ','
          << (std::isnan(h.val_accuracy) ? std::string("nan") : format_g17(h.val_accuracy)) << '\n';
    }
  }
  return result;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir, const std::string& stage) {
  const auto path = detail::path_in(dir, files::kModel);
  auto in = detail::open_in(stage, path);
  try {
    return read_checkpoint(in);
  } catch (const std::exception& e) {
    throw DataError(stage, path, e.what());
  }
}

// --- predict --------------------------------------------------------------------

struct PredictSummary {
  std::size_t predicted = 0;
  std::size_t coerced = 0;
};

inline PredictSummary run_predict(const RunConfig&, const std::filesystem::path& dir) {
  const std::string stage = "predict";
  const auto ck = load_checkpoint(dir, stage);
  const auto s = load_staged(dir, stage);
  PredictSummary summary;
  auto out = detail::open_out(stage, detail::path_in(dir, files::kPredictions));
  const bool multi = ck.model.config.scenario == Scenario::MultiLabel;
  out << (multi ? "graph_id,p_l1,p_l2,p_l3,p_l4,pred_label\n" : "graph_id,p_good,pred\n");
  for (auto i : s.unknown) {
    const auto& g = s.data.graphs[i];
    Prediction p;
    try {
      p = predict(ck.model, g, s.features.at(g.id()));
    } catch (const ShapeError& e) {
      throw DataError(stage, detail::path_in(dir, files::kFeatures), e.what());
    }
    ++summary.predicted;
    summary.coerced += p.coerced;
    out << g.id();
    if (multi) {
      for (double v : p.probabilities) out << ',' << format_g17(v);
      out << ',' << p.label.str() << '\n';
    } else {
      out << ',' << format_g17(p.probabilities[1]) << ',' << p.label.binary_class() << '\n';
    }
  }
  return summary;
}

// --- metrics --------------------------------------------------------------------

inline MetricsReport run_metrics(const RunConfig&, const std::filesystem::path& dir) {
  const std::string stage = "metrics";
  const auto d = load_dataset(dir, stage);
  const auto ck = load_checkpoint(dir, stage);
  const auto scenario = ck.model.config.scenario;
  const auto path = detail::path_in(dir, files::kPredictions);
  auto in = detail::open_in(stage, path);
  std::string line;
  std::getline(in, line);
  const bool multi = scenario == Scenario::MultiLabel;
  if (line != (multi ? "graph_id,p_l1,p_l2,p_l3,p_l4,pred_label" : "graph_id,p_good,pred")) {
    throw DataError(stage, path, "header does not match the model's scenario");
  }
  std::vector<std::vector<double>> probs;
  std::vector<std::vector<int>> preds, truth;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto f = detail::csv_fields(line);
    if (f.size() != (multi ? 6u : 3u)) throw DataError(stage, path, "row " + std::to_string(row) + ": wrong field count");
    auto it = d.index.find(f[0]);
    if (it == d.index.end()) throw DataError(stage, path, "row " + std::to_string(row) + ": unknown id '" + f[0] + "'");
    LabelArray t;
    try {
      t = truth_label(d, it->second, scenario, ck.meta.binary_threshold);
    } catch (const std::exception& e) {
      throw DataError(stage, detail::path_in(dir, files::kManifest), e.what());
    }
    if (multi) {
      std::vector<double> p;
      for (std::size_t c = 1; c <= 4; ++c) p.push_back(detail::parse_double(f[c], stage, path, row));
      if (f[5].size() != 4) throw DataError(stage, path, "row " + std::to_string(row) + ": bad pred_label");
      std::vector<int> y;
      for (char ch : f[5]) {
        if (ch != '0' && ch != '1') throw DataError(stage, path, "row " + std::to_string(row) + ": bad pred_label");
        y.push_back(ch - '0');
      }
      probs.push_back(p);
      preds.push_back(y);
      truth.push_back({t.values[0], t.values[1], t.values[2], t.values[3]});
    } else {
      probs.push_back({detail::parse_double(f[1], stage, path, row)});
      if (f[2] != "0" && f[2] != "1") throw DataError(stage, path, "row " + std::to_string(row) + ": bad pred");
      preds.push_back({f[2] == "1" ? 1 : 0});
      truth.push_back({t.binary_class()});
    }
  }
  if (truth.empty()) throw DataError(stage, path, "no predictions");
  const std::vector<std::string> names =
      multi ? std::vector<std::string>{"l1", "l2", "l3", "l4"} : std::vector<std::string>{"good"};
  const auto report = evaluate_labels(names, probs, preds, truth, std::string(to_string(scenario)));
  {
    auto out = detail::open_out(stage, detail::path_in(dir, files::kMetrics));
    out << to_json(report).dump(2) << '\n';
  }
  {
    auto out = detail::open_out(stage, detail::path_in(dir, files::kMetricsTable));
    write_label_table(out, report);
  }
  for (const auto& m : report.labels) {
    if (!m.roc) continue;
    auto out = detail::open_out(stage, (dir / ("roc_" + m.name + ".csv")).string());
    write_roc_csv(out, *m.roc);
  }
  return report;
}

// --- iterate --------------------------------------------------------------------

/// Runs the down-selection loop over the simulatable graphs. The PCA model is
/// fit on the node metrics of the initial known set.
inline FinalReport run_iterate(const RunConfig& cfg, const std::filesystem::path& dir) {
  const std::string stage = "iterate";
  const auto d = load_dataset(dir, stage);
  const auto pop = scenario_population(d, Scenario::Binary);
  std::vector<Graph> graphs;
  std::vector<std::string> ids;
  std::vector<double> truth;
  for (auto i : pop) {
    graphs.push_back(d.graphs[i]);
    ids.push_back(d.graphs[i].id());
    truth.push_back(*d.manifest[i].outcome.j_value);
  }
  IterateConfig icfg{cfg.iterate_known_fraction, cfg.iterations, cfg.min_known, cfg.seed};
  Partition part;
  try {
    part = split(ids.size(), icfg.known_fraction, icfg.seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("iterate: ") + e.what());
  }
  std::vector<NodeMetrics> metrics;
  std::size_t nonconverged = 0;
  for (const auto& g : graphs) {
    metrics.push_back(compute_node_metrics(g));
    nonconverged += !metrics.back().spectral_converged;
  }
  if (nonconverged && cfg.strict) {
    throw ConvergenceWarning(std::to_string(nonconverged) + " graph(s) did not converge in power iteration");
  }
  std::optional<PcaModel> pca;
  if (cfg.use_pca) {
    std::vector<MetricRow> rows;
    for (auto p : part.known) {
      for (const auto& r : metrics[p].rows()) rows.push_back(r);
    }
    pca = pca_fit(rows, cfg.pca_k);
  }
  std::vector<Eigen::MatrixXd> features;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    features.push_back(build_feature_matrix(graphs[i], pca ? &*pca : nullptr, &metrics[i]));
  }
  GnnClassifier classifier(graphs, features, cfg.train_config());
  const auto report = run(ids, [&](std::size_t i) { return truth[i]; }, classifier, icfg, &truth);
  {
    auto out = detail::open_out(stage, detail::path_in(dir, files::kIterateReport));
    out << to_json(report, ids).dump(2) << '\n';
  }
  {
    auto out = detail::open_out(stage, detail::path_in(dir, files::kMedians));
    write_medians_csv(out, report);
  }
  {
    auto out = detail::open_out(stage, detail::path_in(dir, files::kRetained));
    for (auto i : report.retained) out << ids[i] << '\n';
  }
  return report;
}

}  // namespace icgsbd
