#pragma once

// Generators and brute-force oracles shared by the unit and acceptance tests.
// Nothing here calls the library code it is used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "icgsbd/graph.hpp"

namespace testsupport {

using icgsbd::Edge;
using icgsbd::Graph;
using icgsbd::VertexLabel;

inline VertexLabel random_label(std::mt19937_64& rng) {
  return static_cast<VertexLabel>(std::uniform_int_distribution<int>(0, icgsbd::kLabelCount - 1)(rng));
}

/// Simple digraph on n vertices; each ordered pair (i != j) is an arc with probability p.
inline Graph random_graph(std::mt19937_64& rng, std::size_t n, double p, const std::string& id = "r") {
  std::vector<VertexLabel> labels(n);
  for (auto& l : labels) l = random_label(rng);
  std::vector<Edge> edges;
  std::bernoulli_distribution arc(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && arc(rng)) edges.push_back({i, j});
    }
  }
  std::shuffle(edges.begin(), edges.end(), rng);
  return Graph(id, std::move(labels), std::move(edges));
}

inline Graph random_graph(std::mt19937_64& rng, std::size_t n_min, std::size_t n_max, double p) {
  const auto n = std::uniform_int_distribution<std::size_t>(n_min, n_max)(rng);
  return random_graph(rng, n, p);
}

inline std::vector<std::size_t> random_permutation(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

/// Old vertex i becomes new vertex perm[i].
inline Graph permute(const Graph& g, const std::vector<std::size_t>& perm) {
  std::vector<VertexLabel> labels(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) labels[perm[i]] = g.label(i);
  std::vector<Edge> edges;
  for (const auto& e : g.edges()) edges.push_back({perm[e.src], perm[e.dst]});
  return Graph(g.id(), std::move(labels), std::move(edges));
}

inline Eigen::MatrixXd permute_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& perm) {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)])) = x.row(i);
  return out;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0,
                                     double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

// --- path oracles -------------------------------------------------------------

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Floyd-Warshall over unit arc lengths.
inline std::vector<std::vector<double>> floyd_warshall(const Graph& g) {
  const std::size_t n = g.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (const auto& e : g.edges()) d[e.src][e.dst] = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    }
  }
  return d;
}

/// Every simple path from s to t, as vertex sequences.
inline void simple_paths(const Graph& g, std::size_t at, std::size_t t, std::vector<bool>& on,
                         std::vector<std::size_t>& path, std::vector<std::vector<std::size_t>>& out) {
  if (at == t) {
    out.push_back(path);
    return;
  }
  for (std::size_t w = 0; w < g.size(); ++w) {
    if (on[w] || !g.has_edge(at, w)) continue;
    on[w] = true;
    path.push_back(w);
    simple_paths(g, w, t, on, path, out);
    path.pop_back();
    on[w] = false;
  }
}

struct PathOracle {
  std::vector<double> harmonic;
  std::vector<double> betweenness;
};

/// Harmonic and betweenness centrality from explicit enumeration of all simple
/// paths between every ordered pair.
inline PathOracle path_oracle(const Graph& g) {
  const std::size_t n = g.size();
  PathOracle o{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < n; ++t) {
      if (s == t) continue;
      std::vector<bool> on(n, false);
      on[s] = true;
      std::vector<std::size_t> path{s};
      std::vector<std::vector<std::size_t>> paths;
      simple_paths(g, s, t, on, path, paths);
      if (paths.empty()) continue;
      std::size_t shortest = std::numeric_limits<std::size_t>::max();
      for (const auto& p : paths) shortest = std::min(shortest, p.size());
      // harmonic is incoming: C(t) sums 1/d(s,t) over sources s
      o.harmonic[t] += 1.0 / static_cast<double>(shortest - 1);
      std::vector<double> through(n, 0.0);
      double count = 0.0;
      for (const auto& p : paths) {
        if (p.size() != shortest) continue;
        count += 1.0;
        for (std::size_t k = 1; k + 1 < p.size(); ++k) through[p[k]] += 1.0;
      }
      for (std::size_t v = 0; v < n; ++v) o.betweenness[v] += through[v] / count;
    }
  }
  return o;
}

// --- dense eigen oracle -------------------------------------------------------

struct EigenDecomposition {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;  // vectors[k] pairs with values[k]
};

/// Cyclic Jacobi rotations for a small symmetric matrix.
inline EigenDecomposition jacobi(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  EigenDecomposition out;
  for (std::size_t k = 0; k < n; ++k) {
    out.values.push_back(a[k][k]);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = v[i][k];
    out.vectors.push_back(col);
  }
  return out;
}

inline std::vector<std::vector<double>> symmetrized(const Graph& g) {
  std::vector<std::vector<double>> s(g.size(), std::vector<double>(g.size(), 0.0));
  for (const auto& e : g.edges()) s[e.src][e.dst] = s[e.dst][e.src] = 1.0;
  return s;
}

struct SpectralOracle {
  double radius = 0.0;
  std::vector<double> centrality;  // unit norm
};

/// Spectral radius of max(A, A^T) and the unit projection of the all-ones
/// vector onto the eigenspace of the largest eigenvalue (the limit a power
/// iteration started from ones converges to).
inline SpectralOracle spectral_oracle(const Graph& g) {
  SpectralOracle o;
  const std::size_t n = g.size();
  o.centrality.assign(n, 0.0);
  if (n == 0) return o;
  const auto eig = jacobi(symmetrized(g));
  double top = -kInf;
  for (double v : eig.values) {
    top = std::max(top, v);
    o.radius = std::max(o.radius, std::abs(v));
  }
  if (o.radius < 1e-12) return o;
  for (std::size_t k = 0; k < n; ++k) {
    if (eig.values[k] < top - 1e-9) continue;
    const auto& u = eig.vectors[k];
    const double dot = std::accumulate(u.begin(), u.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) o.centrality[i] += dot * u[i];
  }
  double norm = 0.0;
  for (double c : o.centrality) norm += c * c;
  norm = std::sqrt(norm);
  for (double& c : o.centrality) c /= norm;
  return o;
}

// --- metric oracle ------------------------------------------------------------

/// (concordant + ties/2) / (positives * negatives) over all positive/negative pairs.
inline double pair_count_auc(const std::vector<double>& score, const std::vector<int>& truth) {
  double hits = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (truth[i] != 1) continue;
    for (std::size_t j = 0; j < score.size(); ++j) {
      if (truth[j] != 0) continue;
      pairs += 1.0;
      if (score[i] > score[j]) hits += 1.0;
      else if (score[i] == score[j]) hits += 0.5;
    }
  }
  return hits / pairs;
}

// --- fixtures -----------------------------------------------------------------

/// The 11-vertex air cycle machine graph with its published adjacency matrix.
inline Graph acm_matrix_graph() {
  using L = VertexLabel;
  return Graph("acm", {L::RSO, L::HEX, L::HEX, L::HEX, L::HEX, L::BSO, L::FAN, L::RSI, L::ACP, L::TUR, L::BSI},
               {{0, 1}, {1, 2}, {2, 1}, {2, 3}, {2, 6}, {2, 8}, {3, 4}, {4, 3}, {4, 9}, {5, 3}, {6, 7}, {8, 4}, {9, 10}});
}

inline const int kAcmMatrix[11][11] = {
    {0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0}, {0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0}, {0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 0},
    {0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0}, {0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0}, {0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0}, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1}, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}};

/// Same component multiset arranged as two cleanly separated streams:
/// bleed BSO -> HEX -> ACP -> HEX -> TUR -> BSI, ram RSO -> HEX -> HEX -> FAN -> RSI,
/// with counterflow cross-links.
inline Graph acm_stream_graph() {
  using L = VertexLabel;
  // 0 BSO 1 HEX 2 ACP 3 HEX 4 TUR 5 BSI 6 RSO 7 HEX 8 HEX 9 FAN 10 RSI
  return Graph("acm2", {L::BSO, L::HEX, L::ACP, L::HEX, L::TUR, L::BSI, L::RSO, L::HEX, L::HEX, L::FAN, L::RSI},
               {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {6, 7}, {7, 8}, {8, 9}, {9, 10},
                {1, 8}, {8, 1}, {3, 7}, {7, 3}});
}

/// BSO -> HEX -> BSI and RSO -> HEX -> RSI joined by one cross-link.
inline Graph minimal_graph(const std::string& id = "g000001") {
  using L = VertexLabel;
  return Graph(id, {L::BSO, L::HEX, L::BSI, L::RSO, L::HEX, L::RSI},
               {{0, 1}, {1, 2}, {3, 4}, {4, 5}, {1, 4}, {4, 1}});
}

}  // namespace testsupport
