// SPDX-License-Identifier: Apache-2.0
// Exhaustive reference implementations for small graphs.
#pragma once

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "narrmap/structure.hpp"

namespace oracles {

/// Random DAG on nodes 0..n-1 with edges only from lower to higher ids.
inline narrmap::Graph random_dag(std::mt19937_64& rng, std::size_t max_nodes = 8, double density = 0.45) {
  std::uniform_int_distribution<std::size_t> size(2, max_nodes);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  narrmap::Graph g;
  const auto n = size(rng);
  for (std::size_t v = 0; v < n; ++v) g.nodes.insert(v);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (unit(rng) < density) g.edges[{i, j}] = weight(rng);
  return g;
}

/// Every source-to-sink path, listed by depth-first enumeration.
inline void all_paths_from(const narrmap::Graph& g, std::vector<std::size_t>& path,
                           std::vector<std::vector<std::size_t>>& out) {
  const auto succ = g.successors(path.back());
  if (succ.empty()) {
    out.push_back(path);
    return;
  }
  for (const auto& [u, w] : succ) {
    path.push_back(u);
    all_paths_from(g, path, out);
    path.pop_back();
  }
}

/// The maximal path (from an in-degree-0 node with outgoing edges) whose product of
/// outgoing-normalized weights is largest.
inline std::vector<std::size_t> max_product_path(narrmap::Graph g) {
  g.normalize_outgoing();
  std::vector<std::vector<std::size_t>> paths;
  for (auto v : g.nodes) {
    if (g.in_degree(v) != 0 || g.out_degree(v) == 0) continue;
    std::vector<std::size_t> p{v};
    all_paths_from(g, p, paths);
  }
  std::vector<std::size_t> best;
  double best_product = -1.0;
  for (const auto& p : paths) {
    double product = 1.0;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) product *= g.edges.at({p[k], p[k + 1]});
    if (product > best_product) {
      best_product = product;
      best = p;
    }
  }
  return best;
}

/// True when a path of two or more edges leads from a to b using only `edges`.
inline bool long_path_exists(const std::set<narrmap::Edge>& edges, std::size_t a, std::size_t b, std::size_t hops = 0) {
  for (const auto& e : edges) {
    if (e.first != a) continue;
    if (e.second == b && hops >= 1) return true;
    if (e.second < b && long_path_exists(edges, e.second, b, hops + 1)) return true;
  }
  return false;
}

/// Transitive reduction restricted to edges inside each storyline; all other edges stay.
inline std::set<narrmap::Edge> reduced_edges(const narrmap::Graph& g, const std::vector<narrmap::Storyline>& stories) {
  std::set<narrmap::Edge> keep;
  for (const auto& [e, w] : g.edges) keep.insert(e);
  for (const auto& story : stories) {
    const std::set<std::size_t> members(story.begin(), story.end());
    std::set<narrmap::Edge> inner;
    for (const auto& [e, w] : g.edges)
      if (members.count(e.first) && members.count(e.second)) inner.insert(e);
    for (const auto& e : inner)
      if (long_path_exists(inner, e.first, e.second)) keep.erase(e);
  }
  return keep;
}

inline std::set<narrmap::Edge> edge_set(const narrmap::Graph& g) {
  std::set<narrmap::Edge> s;
  for (const auto& [e, w] : g.edges) s.insert(e);
  return s;
}

/// Base-2 Jensen-Shannon divergence written out term by term.
inline double jsd_bits(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) d += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0) d += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return d;
}

/// Structural checks on a finished map, independent of the library's own checker:
/// bounded out-degree, storylines partitioning the nodes into graph paths, at most two
/// edges per ordered storyline pair, and every edge pointing forward in time.
inline std::vector<std::string> map_violations(const narrmap::NarrativeMap& map, std::size_t K) {
  std::vector<std::string> out;
  std::size_t limit = 0;
  while (limit * limit < K) ++limit;

  std::map<std::size_t, std::size_t> out_degree;
  for (const auto& [e, w] : map.graph.edges) {
    ++out_degree[e.first];
    if (e.first >= e.second) out.push_back("backward edge");
  }
  for (const auto& [v, d] : out_degree)
    if (d > limit) out.push_back("out-degree " + std::to_string(d) + " at node " + std::to_string(v));

  std::map<std::size_t, std::size_t> owner;
  for (std::size_t s = 0; s < map.storylines.size(); ++s) {
    const auto& line = map.storylines[s];
    if (line.empty()) out.push_back("empty storyline");
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (!owner.emplace(line[k], s).second) out.push_back("node in two storylines");
      if (k + 1 < line.size() && !map.graph.edges.count({line[k], line[k + 1]})) out.push_back("storyline is not a path");
    }
  }
  std::set<std::size_t> covered;
  for (const auto& [v, s] : owner) covered.insert(v);
  if (covered != map.graph.nodes) out.push_back("storylines do not partition the nodes");

  std::map<std::pair<std::size_t, std::size_t>, int> crossings;
  for (const auto& [e, w] : map.graph.edges) {
    const auto a = owner.find(e.first), b = owner.find(e.second);
    if (a == owner.end() || b == owner.end()) continue;
    if (a->second != b->second && ++crossings[{a->second, b->second}] == 3) out.push_back("three inter-story edges");
  }
  return out;
}

}  // namespace oracles
