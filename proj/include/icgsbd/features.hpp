#pragma once

// Graph-based node metrics (harmonic, betweenness, eigenvector centrality and
// spectral radius), PCA over the pooled metric rows, and feature matrices.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "icgsbd/graph.hpp"

namespace icgsbd {

inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

/// d(v,u): fewest directed edges from v to u, kUnreachable when no path.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, kUnreachable) {}
  std::size_t size() const { return n_; }
  std::size_t operator()(std::size_t from, std::size_t to) const { return d_[from * n_ + to]; }
  std::size_t& operator()(std::size_t from, std::size_t to) { return d_[from * n_ + to]; }

 private:
  std::size_t n_;
  std::vector<std::size_t> d_;
};

inline DistanceMatrix all_pairs_distances(const Graph& g) {
  const std::size_t n = g.size();
  DistanceMatrix d(n);
  std::queue<std::size_t> q;
  for (std::size_t s = 0; s < n; ++s) {
    d(s, s) = 0;
    q.push(s);
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      for (auto w : g.out_neighbors(v)) {
        if (d(s, w) == kUnreachable) {
          d(s, w) = d(s, v) + 1;
          q.push(w);
        }
      }
    }
  }
  return d;
}

/// C(u) = sum over v != u of 1/d(v,u); unreachable v contribute nothing.
inline std::vector<double> harmonic_centrality(const Graph& g) {
  const auto d = all_pairs_distances(g);
  std::vector<double> c(g.size(), 0.0);
  for (std::size_t u = 0; u < g.size(); ++u) {
    for (std::size_t v = 0; v < g.size(); ++v) {
      if (v != u && d(v, u) != kUnreachable) c[u] += 1.0 / static_cast<double>(d(v, u));
    }
  }
  return c;
}

/// Directed, unnormalized, endpoint-excluding betweenness (Brandes).
inline std::vector<double> betweenness_centrality(const Graph& g) {
  const std::size_t n = g.size();
  std::vector<double> cb(n, 0.0);
  std::vector<std::vector<std::size_t>> preds(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<long> dist(n);
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < n; ++s) {
    for (auto& p : preds) p.clear();
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    stack.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    std::queue<std::size_t> q;
    q.push(s);
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      stack.push_back(v);
      for (auto w : g.out_neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      const auto w = *it;
      for (auto v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  return cb;
}

struct SpectralOptions {
  bool symmetrize = true;  // S = max(A, A^T); the directed variant is usually degenerate here
  double tolerance = 1e-10;
  std::size_t max_iterations = 10000;
};

struct PowerIterationResult {
  std::vector<double> vector;  // unit norm, non-negative
  double value = 0.0;          // dominant eigenvalue (spectral radius for non-negative input)
  bool converged = false;      // false doubles as the warning flag
  std::size_t iterations = 0;
};

/// Power iteration on (M + I) from the all-ones vector, where M is the
/// (optionally symmetrized) adjacency. The unit shift keeps the iteration from
/// oscillating on bipartite graphs without changing the Perron vector.
inline PowerIterationResult dominant_eigenpair(const Graph& g, const SpectralOptions& opt = {}) {
  const std::size_t n = g.size();
  PowerIterationResult r;
  r.vector.assign(n, 0.0);
  if (n == 0 || g.edges().empty()) return r;

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : g.edges()) {
    m(static_cast<Eigen::Index>(e.src), static_cast<Eigen::Index>(e.dst)) = 1.0;
    if (opt.symmetrize) m(static_cast<Eigen::Index>(e.dst), static_cast<Eigen::Index>(e.src)) = 1.0;
  }
  const Eigen::MatrixXd shifted = m + Eigen::MatrixXd::Identity(m.rows(), m.cols());

  Eigen::VectorXd x = Eigen::VectorXd::Ones(m.rows()).normalized();
  for (r.iterations = 1; r.iterations <= opt.max_iterations; ++r.iterations) {
    Eigen::VectorXd y = shifted * x;
    const double norm = y.norm();
    if (norm == 0.0) break;
    y /= norm;
    const double change = (y - x).cwiseAbs().maxCoeff();
    x = y;
    if (change < opt.tolerance) {
      r.converged = true;
      break;
    }
  }
  r.iterations = std::min(r.iterations, opt.max_iterations);
  if (opt.symmetrize) {
    r.value = x.dot(m * x);
  } else {
    const double s = x.sum();
    r.value = s > 0.0 ? (m * x).sum() / s : 0.0;
  }
  r.value = std::max(0.0, r.value);
  for (std::size_t i = 0; i < n; ++i) r.vector[i] = std::max(0.0, x(static_cast<Eigen::Index>(i)));
  return r;
}

inline PowerIterationResult eigenvector_centrality(const Graph& g, const SpectralOptions& opt = {}) {
  return dominant_eigenpair(g, opt);
}

/// Returns only the value and flag; the zero matrix yields 0 without a warning.
inline PowerIterationResult spectral_radius(const Graph& g, const SpectralOptions& opt = {}) {
  auto r = dominant_eigenpair(g, opt);
  if (g.edges().empty()) r.converged = true;
  r.vector.clear();
  return r;
}

using MetricRow = std::array<double, 4>;  // harmonic, betweenness, eigenvector, spectral radius

struct NodeMetrics {
  std::vector<double> harmonic;
  std::vector<double> betweenness;
  std::vector<double> eigenvector;
  double spectral_radius = 0.0;
  bool spectral_converged = true;

  std::vector<MetricRow> rows() const {
    std::vector<MetricRow> out(harmonic.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = {harmonic[i], betweenness[i], eigenvector[i], spectral_radius};
    }
    return out;
  }
};

inline NodeMetrics compute_node_metrics(const Graph& g, const SpectralOptions& opt = {}) {
  NodeMetrics m;
  m.harmonic = harmonic_centrality(g);
  m.betweenness = betweenness_centrality(g);
  auto eig = dominant_eigenpair(g, opt);
  m.eigenvector = std::move(eig.vector);
  m.spectral_radius = eig.value;
  m.spectral_converged = eig.converged || g.edges().empty();
  return m;
}

// --- PCA --------------------------------------------------------------------

inline constexpr double kStdFloor = 1e-12;

struct PcaModel {
  MetricRow feature_means{};
  MetricRow feature_stds{};
  std::array<bool, 4> constant_feature{};
  std::vector<MetricRow> components;  // k orthonormal rows
  std::vector<double> explained_variance_ratio;

  std::size_t k() const { return components.size(); }
};

/// z-score standardization (population moments), then the top-k eigenvectors
/// of the 4x4 covariance. Each component's largest-magnitude entry is positive.
inline PcaModel pca_fit(std::span<const MetricRow> rows, std::size_t k) {
  if (rows.size() < 2) throw std::invalid_argument("pca_fit: need at least 2 rows");
  if (k < 1 || k > 4) throw std::invalid_argument("pca_fit: k must lie in [1,4]");
  const double m = static_cast<double>(rows.size());
  PcaModel model;
  for (std::size_t j = 0; j < 4; ++j) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[j];
    mean /= m;
    double var = 0.0;
    for (const auto& r : rows) var += (r[j] - mean) * (r[j] - mean);
    double sd = std::sqrt(var / m);
    model.feature_means[j] = mean;
    model.constant_feature[j] = sd < kStdFloor;
    model.feature_stds[j] = model.constant_feature[j] ? 1.0 : sd;
  }
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  for (const auto& r : rows) {
    Eigen::Vector4d z;
    for (int j = 0; j < 4; ++j) z(j) = (r[j] - model.feature_means[j]) / model.feature_stds[j];
    cov += z * z.transpose();
  }
  cov /= m;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(cov);
  const Eigen::Vector4d values = solver.eigenvalues();  // ascending
  const Eigen::Matrix4d vectors = solver.eigenvectors();
  double total = 0.0;
  for (int j = 0; j < 4; ++j) total += std::max(0.0, values(j));
  for (std::size_t c = 0; c < k; ++c) {
    const int col = 3 - static_cast<int>(c);
    Eigen::Vector4d v = vectors.col(col);
    int big = 0;
    for (int j = 1; j < 4; ++j) {
      if (std::abs(v(j)) > std::abs(v(big)) + 1e-12) big = j;
    }
    if (v(big) < 0) v = -v;
    model.components.push_back({v(0), v(1), v(2), v(3)});
    model.explained_variance_ratio.push_back(total > 0.0 ? std::max(0.0, values(col)) / total : 0.0);
  }
  return model;
}

/// scores = ((rows - means) / stds) * components^T, an m x k matrix.
inline Eigen::MatrixXd pca_transform(const PcaModel& model, std::span<const MetricRow> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(model.k()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < model.k(); ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        s += (rows[i][j] - model.feature_means[j]) / model.feature_stds[j] * model.components[c][j];
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = s;
    }
  }
  return out;
}

inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_pca_model(std::ostream& out, const PcaModel& model) {
  auto row = [&](const char* key, const auto& values) {
    out << key;
    for (auto v : values) out << ' ' << format_g17(static_cast<double>(v));
    out << '\n';
  };
  out << "icgsbd-pca 1\n";
  out << "k " << model.k() << '\n';
  row("means", model.feature_means);
  row("stds", model.feature_stds);
  out << "constant";
  for (bool c : model.constant_feature) out << ' ' << (c ? 1 : 0);
  out << '\n';
  for (std::size_t c = 0; c < model.k(); ++c) {
    row("component", model.components[c]);
  }
  row("ratios", model.explained_variance_ratio);
}

inline PcaModel read_pca_model(std::istream& in) {
  auto fail = [](const std::string& what) { return std::runtime_error("pca model: " + what); };
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "icgsbd-pca" || version != 1) throw fail("bad header");
  std::size_t k = 0;
  if (!(in >> tag >> k) || tag != "k" || k < 1 || k > 4) throw fail("bad k");
  PcaModel m;
  auto read_row = [&](const char* key, auto& values) {
    if (!(in >> tag) || tag != key) throw fail(std::string("expected '") + key + "'");
    for (auto& v : values) {
      if (!(in >> v)) throw fail(std::string("short '") + key + "' row");
    }
  };
  read_row("means", m.feature_means);
  read_row("stds", m.feature_stds);
  std::array<int, 4> constant{};
  read_row("constant", constant);
  for (std::size_t j = 0; j < 4; ++j) m.constant_feature[j] = constant[j] != 0;
  m.components.resize(k);
  for (auto& c : m.components) read_row("component", c);
  m.explained_variance_ratio.resize(k);
  read_row("ratios", m.explained_variance_ratio);
  return m;
}

// --- feature matrix ---------------------------------------------------------

inline double encode_label(VertexLabel l) { return static_cast<double>(ordinal(l)) / static_cast<double>(kLabelCount - 1); }

/// Column 0: label ordinal / 11. Column 1 (when a PCA model is given): the
/// node's first principal-component score.
inline Eigen::MatrixXd build_feature_matrix(const Graph& g, const PcaModel* model, const NodeMetrics* metrics = nullptr) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd x(n, model ? 2 : 1);
  for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = encode_label(g.label(static_cast<std::size_t>(i)));
  if (model) {
    if (model->k() < 1) throw std::invalid_argument("build_feature_matrix: PCA model has no components");
    const NodeMetrics local = metrics ? NodeMetrics{} : compute_node_metrics(g);
    const auto rows = (metrics ? *metrics : local).rows();
    const auto scores = pca_transform(*model, rows);
    x.col(1) = scores.col(0);
  }
  return x;
}

}  // namespace icgsbd
