#pragma once

// Graph classifier: three GCN layers (X' = X W1^T + (sum of in-neighbour rows) W2^T,
// ReLU after each), global mean pooling, dropout and a linear head. Gradients
// are analytical; optimisation is mini-batch Adam.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "icgsbd/features.hpp"
#include "icgsbd/graph.hpp"

namespace icgsbd {

enum class Scenario { MultiLabel, Binary };

inline std::string_view to_string(Scenario s) { return s == Scenario::MultiLabel ? "multi_label" : "binary"; }

inline Scenario parse_scenario(std::string_view s) {
  if (s == "multi_label") return Scenario::MultiLabel;
  if (s == "binary") return Scenario::Binary;
  throw std::invalid_argument("unknown scenario '" + std::string(s) + "'");
}

/// Logit count: two 2-way groups for multi-label, one for binary.
constexpr std::size_t output_width(Scenario s) { return s == Scenario::MultiLabel ? 4 : 2; }
constexpr std::size_t group_count(Scenario s) { return s == Scenario::MultiLabel ? 2 : 1; }

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Multi-label arrays are [l1,l2,l3,l4] where (l1,l2) one-hot encodes
/// not-compile/compile and (l3,l4) not-simulate/simulate. Binary arrays are
/// one-hot of {bad, good}.
struct LabelArray {
  Scenario scenario = Scenario::MultiLabel;
  std::array<int, 4> values{};

  static LabelArray multi_label(bool compiles, bool simulates) {
    if (simulates && !compiles) throw std::invalid_argument("label: simulates without compiles");
    return {Scenario::MultiLabel, {compiles ? 0 : 1, compiles ? 1 : 0, simulates ? 0 : 1, simulates ? 1 : 0}};
  }
  static LabelArray binary(int cls) {
    if (cls != 0 && cls != 1) throw std::invalid_argument("label: binary class must be 0 or 1");
    return {Scenario::Binary, {cls == 0 ? 1 : 0, cls == 1 ? 1 : 0, 0, 0}};
  }
  static LabelArray from_values(Scenario s, std::span<const int> v) {
    if (v.size() != output_width(s)) throw std::invalid_argument("label: wrong array length");
    if (s == Scenario::Binary) {
      if (v[0] + v[1] != 1 || v[0] < 0 || v[1] < 0) throw std::invalid_argument("label: not one-hot");
      return binary(v[1]);
    }
    const std::array<int, 4> a{v[0], v[1], v[2], v[3]};
    if (a == std::array<int, 4>{0, 1, 0, 1}) return multi_label(true, true);
    if (a == std::array<int, 4>{0, 1, 1, 0}) return multi_label(true, false);
    if (a == std::array<int, 4>{1, 0, 1, 0}) return multi_label(false, false);
    throw std::invalid_argument("label: not one of [0,1,0,1], [0,1,1,0], [1,0,1,0]");
  }

  std::size_t size() const { return output_width(scenario); }
  bool compiles() const { return values[1] == 1; }
  bool simulates() const { return values[3] == 1; }
  int binary_class() const { return values[1]; }
  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < size(); ++i) s += static_cast<char>('0' + values[i]);
    return s;
  }
  friend bool operator==(const LabelArray&, const LabelArray&) = default;
};

// --- parameters -------------------------------------------------------------

struct GcnLayer {
  Eigen::MatrixXd self_weight;      // W1, d_out x d_in
  Eigen::MatrixXd neighbor_weight;  // W2, d_out x d_in
};

struct Parameters {
  std::array<GcnLayer, 3> layers;
  Eigen::MatrixXd head_weight;  // C x h
  Eigen::VectorXd head_bias;    // C

  /// Every tensor as a flat span, in a fixed order.
  std::vector<std::span<double>> tensors() {
    std::vector<std::span<double>> out;
    auto add = [&](auto& t) { out.emplace_back(t.data(), static_cast<std::size_t>(t.size())); };
    for (auto& l : layers) {
      add(l.self_weight);
      add(l.neighbor_weight);
    }
    add(head_weight);
    add(head_bias);
    return out;
  }
  std::vector<std::span<const double>> tensors() const {
    std::vector<std::span<const double>> out;
    for (auto s : const_cast<Parameters*>(this)->tensors()) out.emplace_back(s.data(), s.size());
    return out;
  }

  Parameters zeros_like() const {
    Parameters z;
    for (std::size_t i = 0; i < 3; ++i) {
      z.layers[i].self_weight = Eigen::MatrixXd::Zero(layers[i].self_weight.rows(), layers[i].self_weight.cols());
      z.layers[i].neighbor_weight =
          Eigen::MatrixXd::Zero(layers[i].neighbor_weight.rows(), layers[i].neighbor_weight.cols());
    }
    z.head_weight = Eigen::MatrixXd::Zero(head_weight.rows(), head_weight.cols());
    z.head_bias = Eigen::VectorXd::Zero(head_bias.size());
    return z;
  }

  friend bool operator==(const Parameters& a, const Parameters& b) {
    auto ta = a.tensors(), tb = b.tensors();
    for (std::size_t i = 0; i < ta.size(); ++i) {
      if (ta[i].size() != tb[i].size() || !std::equal(ta[i].begin(), ta[i].end(), tb[i].begin())) return false;
    }
    return true;
  }
};

struct ModelConfig {
  std::size_t input_dim = 1;
  std::size_t hidden = 64;
  Scenario scenario = Scenario::MultiLabel;
  double dropout_rate = 0.5;
};

struct Model {
  ModelConfig config;
  Parameters params;
};

inline Model zero_model(const ModelConfig& cfg) {
  if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0) throw std::invalid_argument("dropout rate must lie in [0,1)");
  if (cfg.input_dim == 0 || cfg.hidden == 0) throw std::invalid_argument("model dimensions must be positive");
  Model m{cfg, {}};
  const auto h = static_cast<Eigen::Index>(cfg.hidden);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto in = static_cast<Eigen::Index>(i == 0 ? cfg.input_dim : cfg.hidden);
    m.params.layers[i].self_weight = Eigen::MatrixXd::Zero(h, in);
    m.params.layers[i].neighbor_weight = Eigen::MatrixXd::Zero(h, in);
  }
  const auto c = static_cast<Eigen::Index>(output_width(cfg.scenario));
  m.params.head_weight = Eigen::MatrixXd::Zero(c, h);
  m.params.head_bias = Eigen::VectorXd::Zero(c);
  return m;
}

/// Every parameter uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; the head bias
/// uses the head's fan-in.
inline Model init_model(const ModelConfig& cfg, std::mt19937_64& rng) {
  Model m = zero_model(cfg);
  auto fill = [&](auto& t, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
  };
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t fan_in = i == 0 ? cfg.input_dim : cfg.hidden;
    fill(m.params.layers[i].self_weight, fan_in);
    fill(m.params.layers[i].neighbor_weight, fan_in);
  }
  fill(m.params.head_weight, cfg.hidden);
  fill(m.params.head_bias, cfg.hidden);
  return m;
}

// --- forward ------------------------------------------------------------------

/// Row i of the result is the sum of rows j over edges (j, i).
inline Eigen::MatrixXd aggregate_in(const Graph& g, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (const auto& e : g.edges()) {
    out.row(static_cast<Eigen::Index>(e.dst)) += x.row(static_cast<Eigen::Index>(e.src));
  }
  return out;
}

/// Adjoint of aggregate_in: row j receives the sum of rows i over edges (j, i).
inline Eigen::MatrixXd scatter_out(const Graph& g, const Eigen::MatrixXd& d) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d.rows(), d.cols());
  for (const auto& e : g.edges()) {
    out.row(static_cast<Eigen::Index>(e.src)) += d.row(static_cast<Eigen::Index>(e.dst));
  }
  return out;
}

inline Eigen::MatrixXd gcn_forward(const Eigen::MatrixXd& x, const Graph& g, const GcnLayer& p) {
  if (static_cast<std::size_t>(x.rows()) != g.size()) throw ShapeError("gcn_forward: row count != vertex count");
  if (x.cols() != p.self_weight.cols() || x.cols() != p.neighbor_weight.cols()) {
    throw ShapeError("gcn_forward: feature width does not match layer input");
  }
  return x * p.self_weight.transpose() + aggregate_in(g, x) * p.neighbor_weight.transpose();
}

inline Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

inline Eigen::VectorXd global_mean_pool(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) throw ShapeError("global_mean_pool: empty graph");
  return x.colwise().mean().transpose();
}

enum class Mode { Training, Inference };

/// Inverted dropout. In training mode each entry is kept with probability
/// 1 - rate and scaled by 1/(1 - rate). `mask`, when given, receives the
/// per-entry multiplier.
inline Eigen::VectorXd dropout(const Eigen::VectorXd& r, double rate, std::mt19937_64* rng, Mode mode,
                               Eigen::VectorXd* mask = nullptr) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must lie in [0,1)");
  Eigen::VectorXd keep = Eigen::VectorXd::Ones(r.size());
  if (mode == Mode::Training && rate > 0.0) {
    if (!rng) throw std::invalid_argument("dropout: training mode needs an rng");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double scale = 1.0 / (1.0 - rate);
    for (Eigen::Index i = 0; i < keep.size(); ++i) keep(i) = u(*rng) < rate ? 0.0 : scale;
  }
  if (mask) *mask = keep;
  return r.cwiseProduct(keep);
}

struct ForwardCache {
  std::array<Eigen::MatrixXd, 3> inputs;      // H_l
  std::array<Eigen::MatrixXd, 3> aggregated;  // A^T H_l
  std::array<Eigen::MatrixXd, 3> preact;      // Z_l
  Eigen::VectorXd pooled;
  Eigen::VectorXd mask;
  Eigen::VectorXd dropped;
  Eigen::VectorXd logits;
};

inline Eigen::VectorXd model_forward(const Graph& g, const Eigen::MatrixXd& x, const Model& m, Mode mode,
                                     std::mt19937_64* rng = nullptr, ForwardCache* cache = nullptr) {
  if (static_cast<std::size_t>(x.rows()) != g.size()) throw ShapeError("model_forward: feature rows != vertex count");
  if (static_cast<std::size_t>(x.cols()) != m.config.input_dim) {
    throw ShapeError("model_forward: feature width " + std::to_string(x.cols()) + " != model input " +
                     std::to_string(m.config.input_dim));
  }
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& p = m.params.layers[l];
    c.inputs[l] = h;
    c.aggregated[l] = aggregate_in(g, h);
    c.preact[l] = h * p.self_weight.transpose() + c.aggregated[l] * p.neighbor_weight.transpose();
    h = relu(c.preact[l]);
  }
  c.pooled = global_mean_pool(h);
  c.dropped = dropout(c.pooled, m.config.dropout_rate, rng, mode, &c.mask);
  c.logits = m.params.head_weight * c.dropped + m.params.head_bias;
  return c.logits;
}

// --- loss -------------------------------------------------------------------

/// Sum of softmax cross-entropies over the label groups. `grad`, when given,
/// receives d(loss)/d(logits).
inline double loss(const Eigen::VectorXd& logits, const LabelArray& label, Eigen::VectorXd* grad = nullptr) {
  const std::size_t width = output_width(label.scenario);
  if (static_cast<std::size_t>(logits.size()) != width) throw ShapeError("loss: logit count does not match label");
  if (grad) *grad = Eigen::VectorXd::Zero(logits.size());
  double total = 0.0;
  for (std::size_t gi = 0; gi < group_count(label.scenario); ++gi) {
    const auto a = static_cast<Eigen::Index>(2 * gi), b = a + 1;
    const double hi = std::max(logits(a), logits(b));
    const double ea = std::exp(logits(a) - hi), eb = std::exp(logits(b) - hi);
    const double lse = hi + std::log(ea + eb);
    const Eigen::Index truth = label.values[static_cast<std::size_t>(a)] == 1 ? a : b;
    total += lse - logits(truth);
    if (grad) {
      (*grad)(a) = ea / (ea + eb) - (truth == a ? 1.0 : 0.0);
      (*grad)(b) = eb / (ea + eb) - (truth == b ? 1.0 : 0.0);
    }
  }
  return total;
}

// --- backward ---------------------------------------------------------------

/// Accumulates d(loss)/d(params) for one example into `grad`, given the cache
/// from the matching forward pass and d(loss)/d(logits).
inline void backward(const Graph& g, const Model& m, const ForwardCache& c, const Eigen::VectorXd& dlogits,
                     Parameters& grad) {
  grad.head_weight.noalias() += dlogits * c.dropped.transpose();
  grad.head_bias += dlogits;
  const Eigen::VectorXd dpooled = (m.params.head_weight.transpose() * dlogits).cwiseProduct(c.mask);
  const auto n = static_cast<double>(g.size());
  Eigen::MatrixXd dh = (dpooled / n).transpose().replicate(static_cast<Eigen::Index>(g.size()), 1);
  for (std::size_t k = 3; k-- > 0;) {
    const auto& p = m.params.layers[k];
    const Eigen::MatrixXd dz = dh.cwiseProduct((c.preact[k].array() > 0.0).cast<double>().matrix());
    grad.layers[k].self_weight.noalias() += dz.transpose() * c.inputs[k];
    grad.layers[k].neighbor_weight.noalias() += dz.transpose() * c.aggregated[k];
    if (k > 0) dh = dz * p.self_weight + scatter_out(g, dz * p.neighbor_weight);
  }
}

struct Sample {
  const Graph* graph = nullptr;
  Eigen::MatrixXd features;
  LabelArray label;
};

struct BatchGradient {
  double mean_loss = 0.0;
  Parameters grad;
};

/// Mean loss and mean gradient over a batch. Examples are processed in order.
inline BatchGradient batch_gradient(std::span<const Sample> batch, const Model& m, Mode mode,
                                    std::mt19937_64* rng = nullptr) {
  BatchGradient out{0.0, m.params.zeros_like()};
  if (batch.empty()) return out;
  ForwardCache cache;
  Eigen::VectorXd dlogits;
  for (const auto& s : batch) {
    model_forward(*s.graph, s.features, m, mode, rng, &cache);
    out.mean_loss += loss(cache.logits, s.label, &dlogits);
    backward(*s.graph, m, cache, dlogits, out.grad);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.mean_loss *= inv;
  for (auto t : out.grad.tensors()) {
    for (auto& v : t) v *= inv;
  }
  return out;
}

/// Mean inference-mode loss over a set of samples.
inline double mean_loss(std::span<const Sample> samples, const Model& m) {
  double total = 0.0;
  for (const auto& s : samples) total += loss(model_forward(*s.graph, s.features, m, Mode::Inference), s.label);
  return samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
}

// --- Adam ---------------------------------------------------------------------

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  Parameters first_moment;
  Parameters second_moment;
  std::uint64_t step = 0;

  AdamState(const Parameters& like, AdamOptions opt = {})
      : options(opt), first_moment(like.zeros_like()), second_moment(like.zeros_like()) {}
};

inline void adam_step(Parameters& params, const Parameters& grad, AdamState& s) {
  ++s.step;
  const auto& o = s.options;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(s.step));
  auto p = params.tensors();
  auto g = grad.tensors();
  auto m = s.first_moment.tensors();
  auto v = s.second_moment.tensors();
  if (p.size() != g.size()) throw ShapeError("adam_step: gradient layout mismatch");
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p[t].size() != g[t].size()) throw ShapeError("adam_step: gradient shape mismatch");
    for (std::size_t i = 0; i < p[t].size(); ++i) {
      m[t][i] = o.beta1 * m[t][i] + (1.0 - o.beta1) * g[t][i];
      v[t][i] = o.beta2 * v[t][i] + (1.0 - o.beta2) * g[t][i] * g[t][i];
      const double mhat = m[t][i] / c1;
      const double vhat = v[t][i] / c2;
      p[t][i] -= o.learning_rate * mhat / (std::sqrt(vhat) + o.epsilon);
    }
  }
}

// --- prediction ---------------------------------------------------------------

struct Prediction {
  std::vector<double> probabilities;  // per logit, softmax within each group
  LabelArray label;
  bool coerced = false;  // "will not compile" but "will simulate" was mapped to [1,0,1,0]
};

/// Ties in a group go to its first entry (class 0 / "not").
inline Prediction predict_from_logits(const Eigen::VectorXd& logits, Scenario scenario) {
  if (static_cast<std::size_t>(logits.size()) != output_width(scenario)) throw ShapeError("predict: logit count");
  Prediction p;
  p.label.scenario = scenario;
  p.probabilities.resize(output_width(scenario));
  for (std::size_t gi = 0; gi < group_count(scenario); ++gi) {
    const auto a = static_cast<Eigen::Index>(2 * gi), b = a + 1;
    const double pb = 1.0 / (1.0 + std::exp(logits(a) - logits(b)));
    p.probabilities[static_cast<std::size_t>(a)] = 1.0 - pb;
    p.probabilities[static_cast<std::size_t>(b)] = pb;
    const bool second = logits(b) > logits(a);
    p.label.values[static_cast<std::size_t>(a)] = second ? 0 : 1;
    p.label.values[static_cast<std::size_t>(b)] = second ? 1 : 0;
  }
  if (scenario == Scenario::MultiLabel && p.label.values[0] == 1 && p.label.values[3] == 1) {
    p.label.values = {1, 0, 1, 0};
    p.coerced = true;
  }
  return p;
}

inline Prediction predict(const Model& m, const Graph& g, const Eigen::MatrixXd& features) {
  return predict_from_logits(model_forward(g, features, m, Mode::Inference), m.config.scenario);
}

/// Fraction of samples whose hard label array matches exactly.
inline double exact_match_accuracy(std::span<const Sample> samples, const Model& m) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hits = 0;
  for (const auto& s : samples) hits += predict(m, *s.graph, s.features).label.values == s.label.values;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

// --- training -------------------------------------------------------------------

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  double dropout = 0.5;
  std::size_t hidden = 64;
  Scenario scenario = Scenario::MultiLabel;
};

struct HistoryRow {
  std::size_t epoch;
  double train_loss;    // mean training-mode loss over the epoch's examples
  double val_accuracy;  // exact-match accuracy on the validation set (NaN if empty)
};

struct TrainResult {
  Model model;
  std::vector<HistoryRow> history;
};

/// Seeded init, seeded per-epoch shuffling and dropout from one generator;
/// returns the final-epoch model.
inline TrainResult train(std::span<const Sample> training, std::span<const Sample> validation,
                         const TrainConfig& cfg) {
  if (training.empty()) throw std::invalid_argument("train: empty training set");
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw std::invalid_argument("train: epochs and batch_size must be >= 1");
  const auto input_dim = static_cast<std::size_t>(training.front().features.cols());
  for (const auto& s : training) {
    if (static_cast<std::size_t>(s.features.cols()) != input_dim) throw ShapeError("train: mixed feature widths");
    if (s.label.scenario != cfg.scenario) throw std::invalid_argument("train: label scenario mismatch");
  }
  std::mt19937_64 rng(cfg.seed);
  TrainResult result{init_model({input_dim, cfg.hidden, cfg.scenario, cfg.dropout}, rng), {}};
  Model& model = result.model;
  AdamState adam(model.params, {cfg.learning_rate});

  std::vector<std::size_t> order(training.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  ForwardCache cache;
  Eigen::VectorXd dlogits;
  Parameters grad = model.params.zeros_like();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (auto t : grad.tensors()) std::fill(t.begin(), t.end(), 0.0);
      for (std::size_t i = start; i < stop; ++i) {
        const auto& s = training[order[i]];
        model_forward(*s.graph, s.features, model, Mode::Training, &rng, &cache);
        epoch_loss += loss(cache.logits, s.label, &dlogits);
        backward(*s.graph, model, cache, dlogits, grad);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (auto t : grad.tensors()) {
        for (auto& v : t) v *= inv;
      }
      adam_step(model.params, grad, adam);
    }
    result.history.push_back(
        {epoch, epoch_loss / static_cast<double>(training.size()), exact_match_accuracy(validation, model)});
  }
  return result;
}

// --- checkpoint -------------------------------------------------------------------

struct CheckpointMeta {
  std::string pca_reference;               // path of the PCA model the features came from ("" = baseline)
  std::optional<double> binary_threshold;  // median J used for binary labels
};

inline void write_checkpoint(std::ostream& out, const Model& m, const CheckpointMeta& meta = {}) {
  out << "icgsbd-model 1\n";
  out << "scenario " << to_string(m.config.scenario) << '\n';
  out << "input_dim " << m.config.input_dim << '\n';
  out << "hidden " << m.config.hidden << '\n';
  out << "dropout " << format_g17(m.config.dropout_rate) << '\n';
  out << "pca " << (meta.pca_reference.empty() ? "-" : meta.pca_reference) << '\n';
  out << "threshold " << (meta.binary_threshold ? format_g17(*meta.binary_threshold) : "-") << '\n';
  const char* names[] = {"layer0.self", "layer0.neighbor", "layer1.self", "layer1.neighbor",
                         "layer2.self", "layer2.neighbor", "head.weight", "head.bias"};
  auto tensors = m.params.tensors();
  auto dims = [&](std::size_t t) -> std::pair<Eigen::Index, Eigen::Index> {
    if (t < 6) {
      const auto& w = t % 2 == 0 ? m.params.layers[t / 2].self_weight : m.params.layers[t / 2].neighbor_weight;
      return {w.rows(), w.cols()};
    }
    if (t == 6) return {m.params.head_weight.rows(), m.params.head_weight.cols()};
    return {m.params.head_bias.size(), 1};
  };
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const auto [r, c] = dims(t);
    out << "tensor " << names[t] << ' ' << r << ' ' << c;
    for (double v : tensors[t]) out << ' ' << format_g17(v);
    out << '\n';
  }
}

struct Checkpoint {
  Model model;
  CheckpointMeta meta;
};

inline Checkpoint read_checkpoint(std::istream& in) {
  auto fail = [](const std::string& what) { return std::runtime_error("checkpoint: " + what); };
  std::string tag, value;
  int version = 0;
  if (!(in >> tag >> version) || tag != "icgsbd-model" || version != 1) throw fail("bad header");
  ModelConfig cfg;
  CheckpointMeta meta;
  auto expect = [&](const char* key) {
    if (!(in >> tag >> value) || tag != key) throw fail(std::string("expected '") + key + "'");
    return value;
  };
  try {
    cfg.scenario = parse_scenario(expect("scenario"));
    cfg.input_dim = std::stoul(expect("input_dim"));
    cfg.hidden = std::stoul(expect("hidden"));
    cfg.dropout_rate = std::stod(expect("dropout"));
    if (auto p = expect("pca"); p != "-") meta.pca_reference = p;
    if (auto t = expect("threshold"); t != "-") meta.binary_threshold = std::stod(t);
  } catch (const std::invalid_argument& e) {
    throw fail(e.what());
  }
  Checkpoint ck{zero_model(cfg), meta};
  for (auto t : ck.model.params.tensors()) {
    std::string name;
    long rows = 0, cols = 0;
    if (!(in >> tag >> name >> rows >> cols) || tag != "tensor") throw fail("expected tensor");
    if (static_cast<std::size_t>(rows * cols) != t.size()) throw fail("tensor " + name + " has wrong shape");
    for (auto& v : t) {
      if (!(in >> v)) throw fail("tensor " + name + " is truncated");
    }
  }
  return ck;
}

}  // namespace icgsbd
