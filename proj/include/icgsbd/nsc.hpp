#pragma once

// Network structure constraints (NSCs) and the structural reading of a TMS
// graph: HEX cross-links are HEX-HEX 2-cycles, every other edge is a flow edge.

#include <array>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "icgsbd/config.hpp"
#include "icgsbd/graph.hpp"

namespace icgsbd {

using LabelPair = std::pair<VertexLabel, VertexLabel>;

enum class Stream { Bleed, Ram, Either };

inline std::string_view to_string(Stream s) {
  switch (s) {
    case Stream::Bleed: return "bleed";
    case Stream::Ram: return "ram";
    case Stream::Either: return "either";
  }
  return "?";
}

/// Every path from a `source` vertex must reach a `sink` vertex, and must not
/// be able to do so while avoiding all `via` vertices.
struct IntermediateRule {
  VertexLabel source;
  VertexLabel sink;
  VertexLabel via;
  friend bool operator==(const IntermediateRule&, const IntermediateRule&) = default;
};

struct NscConfig {
  std::set<LabelPair> direct_connection_forbidden;
  std::set<LabelPair> line_connectivity_allowed;  // empty = no whitelist
  std::vector<LabelPair> downstream_requirements;  // (upstream, downstream) along flow edges
  std::vector<IntermediateRule> intermediate_components;
  std::array<Stream, kLabelCount> subgraph_assignment{};

  static NscConfig tms_default();

  void check() const {
    for (const auto& p : direct_connection_forbidden) {
      if (line_connectivity_allowed.count(p)) {
        throw ConfigError("NSC pair " + std::string(to_string(p.first)) + ">" + std::string(to_string(p.second)) +
                          " is both forbidden and allowed");
      }
    }
  }

  /// Overrides from keys nsc.forbid, nsc.allow, nsc.downstream (A>B lists),
  /// nsc.intermediate (SRC>SINK:VIA list) and nsc.subgraph (LABEL:stream list).
  static NscConfig from_config(const KeyValueConfig& kv, NscConfig base = tms_default());
};

inline LabelPair parse_label_pair(const std::string& text) {
  const auto gt = text.find('>');
  if (gt == std::string::npos) throw ConfigError("expected 'A>B' label pair, got '" + text + "'");
  try {
    return {parse_label(trim(text.substr(0, gt))), parse_label(trim(text.substr(gt + 1)))};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline NscConfig NscConfig::tms_default() {
  using L = VertexLabel;
  NscConfig nsc;
  const std::vector<L> bleed_parts{L::HEX, L::ACP, L::TUR, L::PRV, L::WSP, L::HLF};
  const std::vector<L> ram_parts{L::HEX, L::FAN, L::HLR};
  nsc.direct_connection_forbidden = {{L::BSO, L::BSI}, {L::RSO, L::RSI}, {L::BSO, L::RSI}, {L::RSO, L::BSI}};
  auto allow_stream = [&](L source, L sink, const std::vector<L>& parts) {
    std::vector<L> from{source};
    from.insert(from.end(), parts.begin(), parts.end());
    std::vector<L> to(parts);
    to.push_back(sink);
    for (auto a : from) {
      for (auto b : to) {
        if (!nsc.direct_connection_forbidden.count({a, b})) nsc.line_connectivity_allowed.insert({a, b});
      }
    }
  };
  allow_stream(L::BSO, L::BSI, bleed_parts);
  allow_stream(L::RSO, L::RSI, ram_parts);
  nsc.downstream_requirements = {{L::ACP, L::TUR}};
  nsc.intermediate_components = {{L::BSO, L::BSI, L::HEX}, {L::RSO, L::RSI, L::HEX}};
  for (auto l : {L::BSO, L::BSI, L::ACP, L::TUR, L::PRV, L::WSP, L::HLF}) {
    nsc.subgraph_assignment[static_cast<std::size_t>(l)] = Stream::Bleed;
  }
  for (auto l : {L::RSO, L::RSI, L::FAN, L::HLR}) nsc.subgraph_assignment[static_cast<std::size_t>(l)] = Stream::Ram;
  nsc.subgraph_assignment[static_cast<std::size_t>(L::HEX)] = Stream::Either;
  return nsc;
}

inline NscConfig NscConfig::from_config(const KeyValueConfig& kv, NscConfig base) {
  auto pairs = [&](const std::string& key) {
    std::set<LabelPair> out;
    for (const auto& item : split_list(*kv.get(key))) out.insert(parse_label_pair(item));
    return out;
  };
  if (kv.has("nsc.forbid")) base.direct_connection_forbidden = pairs("nsc.forbid");
  if (kv.has("nsc.allow")) base.line_connectivity_allowed = pairs("nsc.allow");
  if (kv.has("nsc.downstream")) {
    base.downstream_requirements.clear();
    for (const auto& item : split_list(*kv.get("nsc.downstream"))) {
      base.downstream_requirements.push_back(parse_label_pair(item));
    }
  }
  if (kv.has("nsc.intermediate")) {
    base.intermediate_components.clear();
    for (const auto& item : split_list(*kv.get("nsc.intermediate"))) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw ConfigError("expected 'SRC>SINK:VIA', got '" + item + "'");
      auto ends = parse_label_pair(item.substr(0, colon));
      try {
        base.intermediate_components.push_back({ends.first, ends.second, parse_label(trim(item.substr(colon + 1)))});
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  }
  if (kv.has("nsc.subgraph")) {
    for (const auto& item : split_list(*kv.get("nsc.subgraph"))) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw ConfigError("expected 'LABEL:stream', got '" + item + "'");
      const auto stream = trim(item.substr(colon + 1));
      Stream s;
      if (stream == "bleed") s = Stream::Bleed;
      else if (stream == "ram") s = Stream::Ram;
      else if (stream == "either") s = Stream::Either;
      else throw ConfigError("unknown stream '" + stream + "'");
      try {
        base.subgraph_assignment[static_cast<std::size_t>(parse_label(trim(item.substr(0, colon))))] = s;
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  }
  base.check();
  return base;
}

// --- structural helpers -------------------------------------------------

/// HEX pairs {u,v}, u < v, joined by edges in both directions.
inline std::vector<std::pair<std::size_t, std::size_t>> cross_links(const Graph& g) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : g.edges()) {
    if (e.src < e.dst && e.dst < g.size() && g.label(e.src) == VertexLabel::HEX &&
        g.label(e.dst) == VertexLabel::HEX && g.has_edge(e.dst, e.src)) {
      out.emplace_back(e.src, e.dst);
    }
  }
  return out;
}

inline bool is_flow_edge(const Graph& g, std::size_t src, std::size_t dst) {
  return !(g.label(src) == VertexLabel::HEX && g.label(dst) == VertexLabel::HEX && g.has_edge(dst, src));
}

inline std::vector<std::size_t> flow_successors(const Graph& g, std::size_t v) {
  std::vector<std::size_t> out;
  for (auto w : g.out_neighbors(v)) {
    if (is_flow_edge(g, v, w)) out.push_back(w);
  }
  return out;
}

inline std::vector<std::size_t> flow_predecessors(const Graph& g, std::size_t v) {
  std::vector<std::size_t> out;
  for (auto w : g.in_neighbors(v)) {
    if (is_flow_edge(g, w, v)) out.push_back(w);
  }
  return out;
}

/// Vertices reachable from `start` by paths of length >= 1. `blocked` vertices
/// are never entered; `flow_only` ignores cross-link edges.
inline std::vector<bool> reachable_from(const Graph& g, std::size_t start, bool flow_only,
                                        const std::vector<bool>* blocked = nullptr) {
  std::vector<bool> seen(g.size(), false);
  std::queue<std::size_t> q;
  q.push(start);
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (auto w : g.out_neighbors(v)) {
      if (seen[w] || (flow_only && !is_flow_edge(g, v, w))) continue;
      if (blocked && (*blocked)[w]) continue;
      seen[w] = true;
      q.push(w);
    }
  }
  return seen;
}

// --- constraint checks --------------------------------------------------

enum class NscKind { DirectConnection, LineConnectivity, MultiEdge, IntermediateComponent, DownstreamVertex, VertexSubgraph };

inline std::string_view to_string(NscKind kind) {
  switch (kind) {
    case NscKind::DirectConnection: return "direct-connection";
    case NscKind::LineConnectivity: return "line-connectivity";
    case NscKind::MultiEdge: return "multi-edge";
    case NscKind::IntermediateComponent: return "intermediate-component";
    case NscKind::DownstreamVertex: return "downstream-vertex";
    case NscKind::VertexSubgraph: return "vertex-subgraph";
  }
  return "?";
}

struct NscViolation {
  NscKind kind;
  std::size_t vertex;  // offending vertex (edge source for edge rules)
  std::string message;
};

inline std::vector<NscViolation> check_nsc(const Graph& g, const NscConfig& nsc) {
  std::vector<NscViolation> out;
  auto name = [&](std::size_t v) { return std::string(to_string(g.label(v))) + "#" + std::to_string(v); };
  auto stream = [&](std::size_t v) { return nsc.subgraph_assignment[static_cast<std::size_t>(g.label(v))]; };

  std::set<Edge> seen;
  for (const auto& e : g.edges()) {
    const std::string arc = name(e.src) + "->" + name(e.dst);
    if (!seen.insert(e).second) out.push_back({NscKind::MultiEdge, e.src, "repeated edge " + arc});
    const LabelPair p{g.label(e.src), g.label(e.dst)};
    if (nsc.direct_connection_forbidden.count(p)) {
      out.push_back({NscKind::DirectConnection, e.src, "forbidden direct connection " + arc});
    } else if (!nsc.line_connectivity_allowed.empty() && !nsc.line_connectivity_allowed.count(p)) {
      out.push_back({NscKind::LineConnectivity, e.src, "connection type not permitted " + arc});
    }
    const auto a = stream(e.src), b = stream(e.dst);
    if (a != Stream::Either && b != Stream::Either && a != b) {
      out.push_back({NscKind::VertexSubgraph, e.src, "edge crosses subgraphs " + arc});
    }
  }

  for (const auto& rule : nsc.intermediate_components) {
    std::vector<bool> via(g.size(), false);
    for (std::size_t v = 0; v < g.size(); ++v) via[v] = g.label(v) == rule.via;
    for (std::size_t s = 0; s < g.size(); ++s) {
      if (g.label(s) != rule.source) continue;
      auto hits_sink = [&](const std::vector<bool>& reach) {
        for (std::size_t t = 0; t < g.size(); ++t) {
          if (reach[t] && g.label(t) == rule.sink) return true;
        }
        return false;
      };
      if (!hits_sink(reachable_from(g, s, false))) {
        out.push_back({NscKind::IntermediateComponent, s,
                       name(s) + " has no path to any " + std::string(to_string(rule.sink))});
      } else if (hits_sink(reachable_from(g, s, false, &via))) {
        out.push_back({NscKind::IntermediateComponent, s,
                       name(s) + " reaches " + std::string(to_string(rule.sink)) + " without passing a " +
                           std::string(to_string(rule.via))});
      }
    }
  }

  for (const auto& [up, down] : nsc.downstream_requirements) {
    for (std::size_t d = 0; d < g.size(); ++d) {
      if (g.label(d) != down) continue;
      const auto reach = reachable_from(g, d, true);
      for (std::size_t u = 0; u < g.size(); ++u) {
        if (reach[u] && g.label(u) == up) {
          out.push_back({NscKind::DownstreamVertex, d,
                         name(d) + " lies upstream of " + name(u) + " but must be downstream of it"});
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace icgsbd
