#pragma once

// Desk-scale catalog enumeration of TMS graphs and the deterministic surrogate
// oracle that stands in for compile/simulate/utility evaluation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "icgsbd/config.hpp"
#include "icgsbd/graph.hpp"
#include "icgsbd/nsc.hpp"

namespace icgsbd {

enum class HexLayout { Contiguous, Free };

/// How bleed-side HEX i (in chain order) is paired with ram-side HEX j.
enum class LinkPattern {
  Parallel,     // i <-> i
  Counterflow,  // i <-> H-1-i
  Partial,      // parallel without the last pair (H >= 2); leaves two HEX unlinked
};

struct OptionalComponent {
  VertexLabel label;
  int max_count = 1;
};

class BoundExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CatalogSpec {
  std::vector<int> hex_pairs{1, 2, 3};
  std::vector<OptionalComponent> bleed_optional{
      {VertexLabel::ACP}, {VertexLabel::TUR}, {VertexLabel::PRV}, {VertexLabel::WSP}, {VertexLabel::HLF}};
  std::vector<OptionalComponent> ram_optional{{VertexLabel::FAN}, {VertexLabel::HLR}};
  int bleed_min_optional = 0;
  int bleed_max_optional = 2;
  int ram_min_optional = 0;
  int ram_max_optional = 1;
  HexLayout hex_layout = HexLayout::Contiguous;
  std::vector<LinkPattern> link_patterns{LinkPattern::Parallel, LinkPattern::Counterflow, LinkPattern::Partial};
  std::size_t max_nodes = 17;
  std::size_t max_graphs = 100000;
  std::string id_prefix = "g";
  int id_width = 6;

  void check() const {
    if (hex_pairs.empty()) throw ConfigError("catalog.hex_pairs must not be empty");
    for (int h : hex_pairs) {
      if (h < 1 || h > 3) throw ConfigError("catalog.hex_pairs entries must lie in {1,2,3}");
    }
    auto check_parts = [](const std::vector<OptionalComponent>& parts, const char* key) {
      for (const auto& p : parts) {
        using L = VertexLabel;
        const bool ok = p.label == L::FAN || p.label == L::PRV || p.label == L::WSP || p.label == L::ACP ||
                        p.label == L::TUR || p.label == L::HLF || p.label == L::HLR;
        if (!ok) throw ConfigError(std::string(key) + ": " + std::string(to_string(p.label)) + " is not optional");
        if (p.max_count < 1) throw ConfigError(std::string(key) + ": multiplicity must be >= 1");
      }
    };
    check_parts(bleed_optional, "catalog.bleed_optional");
    check_parts(ram_optional, "catalog.ram_optional");
    if (bleed_min_optional < 0 || bleed_min_optional > bleed_max_optional || ram_min_optional < 0 ||
        ram_min_optional > ram_max_optional) {
      throw ConfigError("catalog optional-count bounds must satisfy 0 <= min <= max");
    }
    if (max_nodes > 17) throw ConfigError("catalog.max_nodes must be <= 17");
    if (link_patterns.empty()) throw ConfigError("catalog.link_patterns must not be empty");
  }

  static CatalogSpec from_config(const KeyValueConfig& kv, CatalogSpec base);
  static CatalogSpec from_config(const KeyValueConfig& kv) { return from_config(kv, CatalogSpec{}); }
};

inline CatalogSpec CatalogSpec::from_config(const KeyValueConfig& kv, CatalogSpec base) {
  auto parts = [](const std::string& text) {
    // LABEL or LABEL*count
    std::vector<OptionalComponent> out;
    for (const auto& item : split_list(text)) {
      const auto star = item.find('*');
      try {
        OptionalComponent c{parse_label(trim(item.substr(0, star)))};
        if (star != std::string::npos) c.max_count = std::stoi(item.substr(star + 1));
        out.push_back(c);
      } catch (const std::exception& e) {
        throw ConfigError("bad optional component '" + item + "': " + e.what());
      }
    }
    return out;
  };
  if (auto v = kv.get("catalog.hex_pairs")) {
    base.hex_pairs.clear();
    for (const auto& item : split_list(*v)) {
      try {
        base.hex_pairs.push_back(std::stoi(item));
      } catch (const std::exception&) {
        throw ConfigError("catalog.hex_pairs: bad entry '" + item + "'");
      }
    }
  }
  if (auto v = kv.get("catalog.bleed_optional")) base.bleed_optional = parts(*v);
  if (auto v = kv.get("catalog.ram_optional")) base.ram_optional = parts(*v);
  base.bleed_min_optional = static_cast<int>(kv.get_int("catalog.bleed_min_optional", base.bleed_min_optional));
  base.bleed_max_optional = static_cast<int>(kv.get_int("catalog.bleed_max_optional", base.bleed_max_optional));
  base.ram_min_optional = static_cast<int>(kv.get_int("catalog.ram_min_optional", base.ram_min_optional));
  base.ram_max_optional = static_cast<int>(kv.get_int("catalog.ram_max_optional", base.ram_max_optional));
  if (auto v = kv.get("catalog.hex_layout")) {
    if (*v == "contiguous") base.hex_layout = HexLayout::Contiguous;
    else if (*v == "free") base.hex_layout = HexLayout::Free;
    else throw ConfigError("catalog.hex_layout must be 'contiguous' or 'free'");
  }
  if (auto v = kv.get("catalog.link_patterns")) {
    base.link_patterns.clear();
    for (const auto& item : split_list(*v)) {
      if (item == "parallel") base.link_patterns.push_back(LinkPattern::Parallel);
      else if (item == "counterflow") base.link_patterns.push_back(LinkPattern::Counterflow);
      else if (item == "partial") base.link_patterns.push_back(LinkPattern::Partial);
      else throw ConfigError("unknown link pattern '" + item + "'");
    }
  }
  base.max_nodes = static_cast<std::size_t>(kv.get_u64("catalog.max_nodes", base.max_nodes));
  base.max_graphs = static_cast<std::size_t>(kv.get_u64("catalog.max_graphs", base.max_graphs));
  base.id_prefix = kv.get_string("catalog.id_prefix", base.id_prefix);
  base.check();
  return base;
}

namespace detail {

inline constexpr int kHexBlock = -1;

// All count vectors c with 0 <= c[i] <= max_count[i] and lo <= sum(c) <= hi.
inline void optional_multisets(const std::vector<OptionalComponent>& parts, int lo, int hi,
                               std::vector<std::vector<VertexLabel>>& out) {
  std::vector<int> counts(parts.size(), 0);
  auto rec = [&](auto&& self, std::size_t i, int total) -> void {
    if (i == parts.size()) {
      if (total < lo) return;
      std::vector<VertexLabel> items;
      for (std::size_t k = 0; k < parts.size(); ++k) items.insert(items.end(), counts[k], parts[k].label);
      out.push_back(std::move(items));
      return;
    }
    for (int c = 0; c <= parts[i].max_count && total + c <= hi; ++c) {
      counts[i] = c;
      self(self, i + 1, total + c);
    }
    counts[i] = 0;
  };
  rec(rec, 0, 0);
}

// Distinct chain orderings of the optional items plus `hex` HEX vertices.
inline std::vector<std::vector<VertexLabel>> chain_orderings(const std::vector<VertexLabel>& items, int hex,
                                                             HexLayout layout) {
  std::vector<int> tokens;
  for (auto l : items) tokens.push_back(ordinal(l));
  if (layout == HexLayout::Contiguous) {
    tokens.push_back(kHexBlock);
  } else {
    tokens.insert(tokens.end(), hex, ordinal(VertexLabel::HEX));
  }
  std::sort(tokens.begin(), tokens.end());
  std::vector<std::vector<VertexLabel>> out;
  do {
    std::vector<VertexLabel> chain;
    for (int t : tokens) {
      if (t == kHexBlock) chain.insert(chain.end(), hex, VertexLabel::HEX);
      else chain.push_back(static_cast<VertexLabel>(t));
    }
    out.push_back(std::move(chain));
  } while (std::next_permutation(tokens.begin(), tokens.end()));
  return out;
}

inline std::vector<std::pair<int, int>> link_pairs(LinkPattern pattern, int h) {
  std::vector<std::pair<int, int>> out;
  switch (pattern) {
    case LinkPattern::Parallel:
      for (int i = 0; i < h; ++i) out.emplace_back(i, i);
      break;
    case LinkPattern::Counterflow:
      for (int i = 0; i < h; ++i) out.emplace_back(i, h - 1 - i);
      break;
    case LinkPattern::Partial:
      for (int i = 0; i + 1 < h; ++i) out.emplace_back(i, i);
      break;
  }
  return out;
}

// Vertex order: BSO, bleed chain, BSI, RSO, ram chain, RSI. Edges: bleed flow,
// ram flow, then each cross-link as bleed->ram followed by ram->bleed.
inline Graph assemble(const std::vector<VertexLabel>& bleed, const std::vector<VertexLabel>& ram,
                      const std::vector<std::pair<int, int>>& links) {
  std::vector<VertexLabel> v;
  std::vector<Edge> e;
  std::vector<std::size_t> bleed_hex, ram_hex;
  auto chain = [&](VertexLabel source, const std::vector<VertexLabel>& parts, VertexLabel sink,
                   std::vector<std::size_t>& hexes) {
    std::size_t prev = v.size();
    v.push_back(source);
    for (auto l : parts) {
      const std::size_t cur = v.size();
      v.push_back(l);
      if (l == VertexLabel::HEX) hexes.push_back(cur);
      e.push_back({prev, cur});
      prev = cur;
    }
    const std::size_t end = v.size();
    v.push_back(sink);
    e.push_back({prev, end});
  };
  chain(VertexLabel::BSO, bleed, VertexLabel::BSI, bleed_hex);
  chain(VertexLabel::RSO, ram, VertexLabel::RSI, ram_hex);
  for (auto [b, r] : links) {
    e.push_back({bleed_hex[static_cast<std::size_t>(b)], ram_hex[static_cast<std::size_t>(r)]});
    e.push_back({ram_hex[static_cast<std::size_t>(r)], bleed_hex[static_cast<std::size_t>(b)]});
  }
  return Graph("", std::move(v), std::move(e));
}

// Cheap isomorphism invariant used to bucket candidates before the exact test.
inline std::vector<std::tuple<int, std::size_t, std::size_t>> degree_signature(const Graph& g) {
  std::vector<std::tuple<int, std::size_t, std::size_t>> sig;
  for (std::size_t v = 0; v < g.size(); ++v) {
    sig.emplace_back(ordinal(g.label(v)), g.in_neighbors(v).size(), g.out_neighbors(v).size());
  }
  std::sort(sig.begin(), sig.end());
  return sig;
}

}  // namespace detail

inline std::string format_graph_id(const std::string& prefix, std::size_t index, int width) {
  std::string digits = std::to_string(index);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return prefix + digits;
}

/// Generate, filter by NSC, then drop labeled-isomorphic duplicates keeping the
/// lexicographically smallest serialization. Output is sorted by serialized
/// form (id excluded) and ids are assigned in that order.
inline std::vector<Graph> enumerate_catalog(const CatalogSpec& spec, const NscConfig& nsc) {
  spec.check();
  nsc.check();
  std::vector<std::pair<std::string, Graph>> candidates;
  for (int h : spec.hex_pairs) {
    std::vector<std::vector<VertexLabel>> bleed_sets, ram_sets;
    detail::optional_multisets(spec.bleed_optional, spec.bleed_min_optional, spec.bleed_max_optional, bleed_sets);
    detail::optional_multisets(spec.ram_optional, spec.ram_min_optional, spec.ram_max_optional, ram_sets);
    std::vector<std::vector<std::pair<int, int>>> link_sets;
    for (auto p : spec.link_patterns) {
      auto links = detail::link_pairs(p, h);
      if (!links.empty() && std::find(link_sets.begin(), link_sets.end(), links) == link_sets.end()) {
        link_sets.push_back(std::move(links));
      }
    }
    for (const auto& bs : bleed_sets) {
      const auto bleed_orders = detail::chain_orderings(bs, h, spec.hex_layout);
      for (const auto& rs : ram_sets) {
        if (bs.size() + rs.size() + 2 * static_cast<std::size_t>(h) + 4 > spec.max_nodes) continue;
        const auto ram_orders = detail::chain_orderings(rs, h, spec.hex_layout);
        for (const auto& bo : bleed_orders) {
          for (const auto& ro : ram_orders) {
            for (const auto& links : link_sets) {
              Graph g = detail::assemble(bo, ro, links);
              if (!check_nsc(g, nsc).empty()) continue;
              if (candidates.size() >= spec.max_graphs) {
                throw BoundExceeded("catalog spec generates more than " + std::to_string(spec.max_graphs) +
                                    " graphs");
              }
              auto key = serialize(g);
              candidates.emplace_back(std::move(key), std::move(g));
            }
          }
        }
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  std::map<std::vector<std::tuple<int, std::size_t, std::size_t>>, std::vector<std::size_t>> buckets;
  std::vector<Graph> kept;
  for (auto& [key, g] : candidates) {
    auto& bucket = buckets[detail::degree_signature(g)];
    bool duplicate = false;
    for (auto idx : bucket) {
      if (labeled_isomorphic(kept[idx], g, spec.max_nodes)) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;
    bucket.push_back(kept.size());
    kept.push_back(std::move(g));
  }
  for (std::size_t i = 0; i < kept.size(); ++i) {
    kept[i] = kept[i].with_id(format_graph_id(spec.id_prefix, i, spec.id_width));
  }
  return kept;
}

// --- surrogate oracle ---------------------------------------------------

/// Weights w1..w5 of the utility J (lower is better).
struct OracleParams {
  std::array<double, 5> weights{1.0, 1.0, 1.0, 10.0, 10.0};
};

struct OracleOutcome {
  bool compiles = false;
  bool simulates = false;
  std::optional<double> j_value;
  friend bool operator==(const OracleOutcome&, const OracleOutcome&) = default;
};

/// Result of walking a stream from its source along flow edges.
struct ChainWalk {
  bool simple = false;  // unique source/sink, one flow successor each step, no side inflow
  std::vector<std::size_t> path;
};

inline ChainWalk walk_chain(const Graph& g, VertexLabel source, VertexLabel sink) {
  ChainWalk w;
  std::vector<std::size_t> sources, sinks;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (g.label(v) == source) sources.push_back(v);
    if (g.label(v) == sink) sinks.push_back(v);
  }
  if (sources.size() != 1 || sinks.size() != 1) return w;
  std::vector<bool> visited(g.size(), false);
  std::size_t cur = sources.front();
  if (!flow_predecessors(g, cur).empty()) return w;
  for (;;) {
    visited[cur] = true;
    w.path.push_back(cur);
    const auto next = flow_successors(g, cur);
    if (cur == sinks.front()) {
      w.simple = next.empty();
      return w;
    }
    if (next.size() != 1 || visited[next.front()] || flow_predecessors(g, next.front()).size() != 1) return w;
    cur = next.front();
  }
}

/// Counts feeding the utility formula.
struct StructureSummary {
  int hex_links = 0;    // h
  int bleed_edges = 0;  // p
  int ram_edges = 0;    // r
  bool acp_first = false;  // u: an ACP precedes every HEX on the bleed path
};

class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline OracleOutcome oracle_outcome(const Graph& g, const OracleParams& params = {},
                                    const NscConfig& nsc = NscConfig::tms_default()) {
  if (auto v = check_nsc(g, nsc); !v.empty()) {
    throw PreconditionError("oracle_outcome: graph '" + g.id() + "' violates NSC: " + v.front().message);
  }
  const auto links = cross_links(g);
  std::vector<int> link_count(g.size(), 0);
  for (auto [a, b] : links) {
    ++link_count[a];
    ++link_count[b];
  }
  bool every_hex_linked_once = true;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (g.label(v) == VertexLabel::HEX && link_count[v] != 1) every_hex_linked_once = false;
  }
  const auto bleed = walk_chain(g, VertexLabel::BSO, VertexLabel::BSI);
  const auto ram = walk_chain(g, VertexLabel::RSO, VertexLabel::RSI);

  OracleOutcome out;
  out.compiles = every_hex_linked_once && bleed.simple && ram.simple;
  if (!out.compiles) return out;

  bool turbine_fed = true;
  for (std::size_t t = 0; t < g.size() && turbine_fed; ++t) {
    if (g.label(t) != VertexLabel::TUR) continue;
    bool fed = false;
    for (std::size_t w = 0; w < g.size() && !fed; ++w) {
      if (g.label(w) == VertexLabel::ACP || g.label(w) == VertexLabel::PRV) fed = reachable_from(g, w, true)[t];
    }
    turbine_fed = fed;
  }
  out.simulates = !links.empty() && turbine_fed;
  if (!out.simulates) return out;

  StructureSummary s;
  s.hex_links = static_cast<int>(links.size());
  s.bleed_edges = static_cast<int>(bleed.path.size()) - 1;
  s.ram_edges = static_cast<int>(ram.path.size()) - 1;
  std::optional<std::size_t> first_acp, first_hex;
  for (std::size_t i = 0; i < bleed.path.size(); ++i) {
    const auto l = g.label(bleed.path[i]);
    if (l == VertexLabel::ACP && !first_acp) first_acp = i;
    if (l == VertexLabel::HEX && !first_hex) first_hex = i;
  }
  s.acp_first = first_acp && (!first_hex || *first_acp < *first_hex);

  const double h = s.hex_links, p = s.bleed_edges, r = s.ram_edges, u = s.acp_first ? 1.0 : 0.0;
  const double front_load_temp = 400.0 - 18.0 * h + 2.0 * p - 10.0 * u;
  const double rear_load_temp = 350.0 - 15.0 * h + 1.5 * r;
  const double total_cost = 10.0 * h;
  const double bleed_flow = 0.1 * p;
  const double ram_flow = 0.1 * r;
  const auto& w = params.weights;
  out.j_value = w[0] * (front_load_temp - 343.0) + w[1] * (rear_load_temp - 300.0) + w[2] * total_cost +
                w[3] * bleed_flow + w[4] * ram_flow;
  return out;
}

// --- manifest -------------------------------------------------------------

struct ManifestRow {
  std::string graph_id;
  OracleOutcome outcome;
  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

using Manifest = std::vector<ManifestRow>;

class ManifestError : public std::runtime_error {
 public:
  ManifestError(std::size_t row, const std::string& what)
      : std::runtime_error("manifest row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

inline constexpr const char* kManifestHeader = "graph_id,compiles,simulates,j_value";

inline std::string format_fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string manifest_line(const ManifestRow& row) {
  std::string s = row.graph_id + "," + (row.outcome.compiles ? "1" : "0") + "," + (row.outcome.simulates ? "1" : "0") + ",";
  if (row.outcome.j_value) s += format_fixed6(*row.outcome.j_value);
  return s;
}

inline void write_manifest(std::ostream& out, const Manifest& m) {
  std::vector<std::string> ids;
  for (const auto& row : m) ids.push_back(row.graph_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw std::invalid_argument("write_manifest: duplicate graph id");
  }
  out << kManifestHeader << '\n';
  for (const auto& row : m) out << manifest_line(row) << '\n';
}

inline Manifest read_manifest(std::istream& in) {
  Manifest m;
  std::string line;
  if (!std::getline(in, line) || trim(line) != kManifestHeader) throw ManifestError(0, "missing or wrong header");
  std::size_t row = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 4) throw ManifestError(row, "expected 4 fields, got " + std::to_string(f.size()));
    if (f[0].empty()) throw ManifestError(row, "empty graph_id");
    if (!ids.insert(f[0]).second) throw ManifestError(row, "duplicate graph_id '" + f[0] + "'");
    auto flag = [&](const std::string& s, const char* name) {
      if (s == "0") return false;
      if (s == "1") return true;
      throw ManifestError(row, std::string(name) + " must be 0 or 1");
    };
    ManifestRow r{f[0], {flag(f[1], "compiles"), flag(f[2], "simulates"), std::nullopt}};
    if (r.outcome.simulates && !r.outcome.compiles) throw ManifestError(row, "simulates without compiles");
    if (r.outcome.simulates) {
      if (f[3].empty()) throw ManifestError(row, "simulatable row lacks j_value");
      try {
        std::size_t used = 0;
        r.outcome.j_value = std::stod(f[3], &used);
        if (used != f[3].size() || !std::isfinite(*r.outcome.j_value)) throw std::invalid_argument(f[3]);
      } catch (const std::exception&) {
        throw ManifestError(row, "bad j_value '" + f[3] + "'");
      }
    } else if (!f[3].empty()) {
      throw ManifestError(row, "j_value present on a non-simulatable row");
    }
    m.push_back(std::move(r));
  }
  return m;
}

inline void write_manifest_file(const std::string& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_manifest(out, m);
}

inline Manifest read_manifest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_manifest(in);
}

inline Manifest evaluate_catalog(const std::vector<Graph>& graphs, const OracleParams& params = {},
                                 const NscConfig& nsc = NscConfig::tms_default()) {
  Manifest m;
  m.reserve(graphs.size());
  for (const auto& g : graphs) m.push_back({g.id(), oracle_outcome(g, params, nsc)});
  return m;
}

// --- catalog file ---------------------------------------------------------

inline void write_catalog(std::ostream& out, const std::vector<Graph>& graphs) {
  for (const auto& g : graphs) out << serialize(g) << '\n';
}

inline void write_catalog_file(const std::string& path, const std::vector<Graph>& graphs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_catalog(out, graphs);
}

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<Graph> read_catalog(std::istream& in, const std::string& origin = "<catalog>") {
  std::vector<Graph> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      out.push_back(parse(line));
    } catch (const ParseError& e) {
      throw CatalogError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!ids.insert(out.back().id()).second) {
      throw CatalogError(origin + ":" + std::to_string(lineno) + ": duplicate id '" + out.back().id() + "'");
    }
  }
  return out;
}

inline std::vector<Graph> read_catalog_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CatalogError("cannot open '" + path + "'");
  return read_catalog(in, path);
}

}  // namespace icgsbd
