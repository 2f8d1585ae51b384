#pragma once

// Directed labeled graphs for thermal-management architectures.

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace icgsbd {

enum class VertexLabel : std::uint8_t {
  BSO,  // bleed source
  BSI,  // bleed sink
  RSO,  // ram source
  RSI,  // ram sink
  HEX,  // heat exchanger side
  ACP,  // air cycle compressor
  TUR,  // turbine
  FAN,
  PRV,  // pressure regulating valve
  WSP,  // water separator
  HLF,  // front heat load
  HLR,  // rear heat load
};

inline constexpr std::size_t kLabelCount = 12;

inline constexpr std::array<std::string_view, kLabelCount> kLabelNames{
    "BSO", "BSI", "RSO", "RSI", "HEX", "ACP",
    "TUR", "FAN", "PRV", "WSP", "HLF", "HLR"};

constexpr int ordinal(VertexLabel label) { return static_cast<int>(label); }

constexpr std::string_view to_string(VertexLabel label) {
  return kLabelNames[static_cast<std::size_t>(label)];
}

constexpr std::optional<VertexLabel> label_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    if (kLabelNames[i] == name) return static_cast<VertexLabel>(i);
  }
  return std::nullopt;
}

inline VertexLabel parse_label(std::string_view name) {
  if (auto label = label_from_string(name)) return *label;
  throw std::invalid_argument("unknown vertex label '" + std::string(name) + "'");
}

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// A design candidate. Vertex order is significant: it defines matrix indices
/// and is preserved by serialization. Construction does not validate; use
/// validate() or make_graph() for checked construction.
class Graph {
 public:
  Graph() = default;
  Graph(std::string id, std::vector<VertexLabel> vertices, std::vector<Edge> edges)
      : id_(std::move(id)), vertices_(std::move(vertices)), edges_(std::move(edges)) {
    in_.resize(vertices_.size());
    out_.resize(vertices_.size());
    for (const auto& e : edges_) {
      if (e.src >= vertices_.size() || e.dst >= vertices_.size()) continue;
      out_[e.src].push_back(e.dst);
      in_[e.dst].push_back(e.src);
    }
  }

  const std::string& id() const { return id_; }
  const std::vector<VertexLabel>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t size() const { return vertices_.size(); }
  VertexLabel label(std::size_t v) const { return vertices_[v]; }

  // Neighbor lists skip out-of-range edges so invalid graphs stay inspectable.
  const std::vector<std::size_t>& in_neighbors(std::size_t v) const { return in_[v]; }
  const std::vector<std::size_t>& out_neighbors(std::size_t v) const { return out_[v]; }

  bool has_edge(std::size_t src, std::size_t dst) const {
    if (src >= out_.size()) return false;
    const auto& o = out_[src];
    return std::find(o.begin(), o.end(), dst) != o.end();
  }

  Graph with_id(std::string id) const { return Graph(std::move(id), vertices_, edges_); }

  /// Structural identity: same vertex order and same edge order (id ignored).
  bool same_structure(const Graph& other) const {
    return vertices_ == other.vertices_ && edges_ == other.edges_;
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.id_ == b.id_ && a.same_structure(b);
  }

 private:
  std::string id_;
  std::vector<VertexLabel> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
};

struct GraphViolation {
  enum class Kind { IndexOutOfRange, DuplicateEdge, SelfLoop };
  Kind kind;
  std::size_t edge_index;
  Edge edge;
  std::string message;
};

inline std::string_view to_string(GraphViolation::Kind kind) {
  switch (kind) {
    case GraphViolation::Kind::IndexOutOfRange: return "index-range";
    case GraphViolation::Kind::DuplicateEdge: return "multi-edge";
    case GraphViolation::Kind::SelfLoop: return "self-loop";
  }
  return "?";
}

inline std::vector<GraphViolation> validate(const Graph& g) {
  std::vector<GraphViolation> out;
  const std::size_t n = g.size();
  std::vector<Edge> seen;
  for (std::size_t k = 0; k < g.edges().size(); ++k) {
    const Edge e = g.edges()[k];
    const std::string where =
        "edge #" + std::to_string(k) + " (" + std::to_string(e.src) + "," + std::to_string(e.dst) + ")";
    if (e.src >= n || e.dst >= n) {
      out.push_back({GraphViolation::Kind::IndexOutOfRange, k, e,
                     where + " references a vertex outside [0," + std::to_string(n) + ")"});
      continue;
    }
    if (e.src == e.dst) {
      out.push_back({GraphViolation::Kind::SelfLoop, k, e, where + " is a self-loop"});
    }
    if (std::find(seen.begin(), seen.end(), e) != seen.end()) {
      out.push_back({GraphViolation::Kind::DuplicateEdge, k, e, where + " duplicates an earlier edge"});
    } else {
      seen.push_back(e);
    }
  }
  return out;
}

inline Graph make_graph(std::string id, std::vector<VertexLabel> vertices, std::vector<Edge> edges) {
  Graph g(std::move(id), std::move(vertices), std::move(edges));
  if (auto v = validate(g); !v.empty()) throw std::invalid_argument("invalid graph: " + v.front().message);
  return g;
}

/// Dense 0/1 adjacency, a(i,j) = 1 iff edge (i,j) exists.
class AdjacencyMatrix {
 public:
  explicit AdjacencyMatrix(std::size_t n) : n_(n), a_(n * n, 0) {}
  std::size_t size() const { return n_; }
  std::uint8_t operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  std::uint8_t& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(a_.begin(), a_.end(), std::uint8_t{1}));
  }
  friend bool operator==(const AdjacencyMatrix&, const AdjacencyMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<std::uint8_t> a_;
};

inline AdjacencyMatrix build_adjacency(const Graph& g) {
  AdjacencyMatrix a(g.size());
  for (const auto& e : g.edges()) a(e.src, e.dst) = 1;
  return a;
}

class InstanceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultIsomorphismCap = 12;

namespace detail {

struct IsoSearch {
  const Graph& a;
  const Graph& b;
  std::vector<std::size_t> order;  // vertices of a, most constrained first
  std::vector<std::size_t> map;    // a-vertex -> b-vertex
  std::vector<bool> used;

  bool compatible(std::size_t u, std::size_t x) const {
    if (a.label(u) != b.label(x)) return false;
    if (a.in_neighbors(u).size() != b.in_neighbors(x).size()) return false;
    if (a.out_neighbors(u).size() != b.out_neighbors(x).size()) return false;
    return true;
  }

  bool extend(std::size_t depth) {
    if (depth == order.size()) return true;
    const std::size_t u = order[depth];
    for (std::size_t x = 0; x < b.size(); ++x) {
      if (used[x] || !compatible(u, x)) continue;
      bool ok = true;
      for (std::size_t d = 0; d < depth && ok; ++d) {
        const std::size_t w = order[d];
        const std::size_t y = map[w];
        ok = a.has_edge(u, w) == b.has_edge(x, y) && a.has_edge(w, u) == b.has_edge(y, x);
      }
      if (!ok) continue;
      map[u] = x;
      used[x] = true;
      if (extend(depth + 1)) return true;
      used[x] = false;
    }
    return false;
  }
};

}  // namespace detail

/// Labeled directed isomorphism by label-partitioned backtracking. Throws
/// InstanceTooLarge when either graph exceeds `cap` vertices.
inline bool labeled_isomorphic(const Graph& a, const Graph& b, std::size_t cap = kDefaultIsomorphismCap) {
  if (a.size() > cap || b.size() > cap) {
    throw InstanceTooLarge("labeled_isomorphic: " + std::to_string(std::max(a.size(), b.size())) +
                           " vertices exceeds cap " + std::to_string(cap));
  }
  if (a.size() != b.size() || a.edges().size() != b.edges().size()) return false;
  auto la = a.vertices();
  auto lb = b.vertices();
  std::sort(la.begin(), la.end());
  std::sort(lb.begin(), lb.end());
  if (la != lb) return false;

  std::array<std::size_t, kLabelCount> class_size{};
  for (auto l : a.vertices()) ++class_size[static_cast<std::size_t>(l)];

  detail::IsoSearch s{a, b, {}, std::vector<std::size_t>(a.size()), std::vector<bool>(b.size(), false)};
  s.order.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) s.order[i] = i;
  std::stable_sort(s.order.begin(), s.order.end(), [&](std::size_t x, std::size_t y) {
    return class_size[static_cast<std::size_t>(a.label(x))] < class_size[static_cast<std::size_t>(a.label(y))];
  });
  return s.extend(0);
}

// --- JSON Lines serialization -------------------------------------------

class ParseError : public std::runtime_error {
 public:
  enum class Kind { Malformed, UnknownLabel, InvalidGraph };
  ParseError(Kind kind, std::size_t offset, const std::string& what)
      : std::runtime_error("byte " + std::to_string(offset) + ": " + what), kind_(kind), offset_(offset) {}
  Kind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

/// One catalog line: {"id":"...","nodes":[...],"edges":[[s,d],...]}
inline std::string serialize(const Graph& g) {
  std::string s = "{\"id\":" + nlohmann::json(g.id()).dump() + ",\"nodes\":[";
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) s += ',';
    s += '"';
    s += to_string(g.label(i));
    s += '"';
  }
  s += "],\"edges\":[";
  for (std::size_t k = 0; k < g.edges().size(); ++k) {
    if (k) s += ',';
    s += '[' + std::to_string(g.edges()[k].src) + ',' + std::to_string(g.edges()[k].dst) + ']';
  }
  s += "]}";
  return s;
}

inline Graph parse(std::string_view line) {
  using Kind = ParseError::Kind;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(Kind::Malformed, e.byte > 0 ? e.byte - 1 : 0, e.what());
  }
  auto key_offset = [&](std::string_view key) {
    const auto pos = line.find("\"" + std::string(key) + "\"");
    return pos == std::string_view::npos ? std::size_t{0} : pos;
  };
  if (!doc.is_object()) throw ParseError(Kind::Malformed, 0, "expected a JSON object");
  for (const char* key : {"id", "nodes", "edges"}) {
    if (!doc.contains(key)) throw ParseError(Kind::Malformed, 0, std::string("missing key '") + key + "'");
  }
  if (!doc["id"].is_string()) throw ParseError(Kind::Malformed, key_offset("id"), "'id' must be a string");
  if (!doc["nodes"].is_array()) throw ParseError(Kind::Malformed, key_offset("nodes"), "'nodes' must be an array");
  if (!doc["edges"].is_array()) throw ParseError(Kind::Malformed, key_offset("edges"), "'edges' must be an array");

  std::vector<VertexLabel> vertices;
  std::size_t cursor = key_offset("nodes");
  for (const auto& node : doc["nodes"]) {
    if (!node.is_string()) throw ParseError(Kind::Malformed, cursor, "node labels must be strings");
    const auto name = node.get<std::string>();
    const auto pos = line.find("\"" + name + "\"", cursor);
    const std::size_t at = pos == std::string_view::npos ? cursor : pos;
    auto label = label_from_string(name);
    if (!label) throw ParseError(Kind::UnknownLabel, at, "unknown vertex label '" + name + "'");
    vertices.push_back(*label);
    cursor = at + name.size() + 2;
  }

  std::vector<Edge> edges;
  const std::size_t edges_at = key_offset("edges");
  for (const auto& e : doc["edges"]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned()) {
      throw ParseError(Kind::Malformed, edges_at, "each edge must be a pair of non-negative integers");
    }
    edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
  }
  Graph g(doc["id"].get<std::string>(), std::move(vertices), std::move(edges));
  if (auto v = validate(g); !v.empty()) throw ParseError(Kind::InvalidGraph, edges_at, v.front().message);
  return g;
}

}  // namespace icgsbd
