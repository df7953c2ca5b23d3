// SPDX-License-Identifier: Apache-2.0
#include "narrmap/structure.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "narrmap/error.hpp"
#include "narrmap/projection.hpp"

namespace narrmap {

std::vector<std::pair<std::size_t, double>> Graph::successors(std::size_t v) const {
  std::vector<std::pair<std::size_t, double>> out;
  for (auto it = edges.lower_bound({v, 0}); it != edges.end() && it->first.first == v; ++it)
    out.emplace_back(it->first.second, it->second);
  return out;
}

std::size_t Graph::out_degree(std::size_t v) const {
  std::size_t d = 0;
  for (auto it = edges.lower_bound({v, 0}); it != edges.end() && it->first.first == v; ++it) ++d;
  return d;
}

std::size_t Graph::in_degree(std::size_t v) const {
  return std::size_t(std::count_if(edges.begin(), edges.end(), [&](const auto& e) { return e.first.second == v; }));
}

void Graph::normalize_outgoing() {
  auto it = edges.begin();
  while (it != edges.end()) {
    const auto v = it->first.first;
    auto end = it;
    double sum = 0.0;
    while (end != edges.end() && end->first.first == v) sum += (end++)->second;
    if (sum > 0.0)
      for (; it != end; ++it) it->second /= sum;
    it = end;
  }
}

std::size_t ceil_sqrt(std::size_t K) {
  std::size_t r = 0;
  while (r * r < K) ++r;
  return r;
}

Graph prune_edges(const RawMap& raw, std::size_t K, const std::set<std::size_t>& keep_isolated) {
  if (K == 0) throw ParameterError("K must be positive");
  const std::size_t limit = ceil_sqrt(K);
  const double threshold = 0.1 / double(K);
  Graph g;
  std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> out;
  for (const auto& [e, w] : raw.edge_weights)
    if (w > kWeightCutoff) out[e.first].emplace_back(e.second, w);
  for (auto& [i, list] : out) {
    std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (list.size() > limit) list.resize(limit);
    double sum = 0.0;
    for (const auto& [j, w] : list) sum += w;
    for (const auto& [j, w] : list) {
      const double nw = w / sum;
      if (nw >= threshold) g.edges.emplace(Edge{i, j}, nw);
    }
  }
  for (const auto& [e, w] : g.edges) {
    g.nodes.insert(e.first);
    g.nodes.insert(e.second);
  }
  for (auto v : keep_isolated)
    if (v < raw.node_weights.size() && raw.node_weights[v] > kWeightCutoff) g.nodes.insert(v);
  return g;
}

namespace {

constexpr double kTieTolerance = 1e-12;

/// Minimum negative log-likelihood to any sink for every node, and the successor achieving it.
void best_paths(const Graph& g, std::map<std::size_t, double>& cost, std::map<std::size_t, std::size_t>& next) {
  for (auto it = g.nodes.rbegin(); it != g.nodes.rend(); ++it) {
    const auto v = *it;
    double best = 0.0;
    std::size_t arg = v;
    bool any = false;
    for (const auto& [u, w] : g.successors(v)) {
      if (!(w > 0.0)) throw ParameterError("edge weights must be positive to take logarithms");
      const double c = -std::log(w) + cost.at(u);
      if (!any || c < best - kTieTolerance) {
        best = c;
        arg = u;
        any = true;
      }
    }
    cost[v] = any ? best : 0.0;
    next[v] = arg;
  }
}

Storyline follow(const std::map<std::size_t, std::size_t>& next, std::size_t v) {
  Storyline path{v};
  for (auto n = next.at(v); n != v; n = next.at(v)) {
    v = n;
    path.push_back(v);
  }
  return path;
}

}  // namespace

std::vector<Storyline> extract_storylines(const Graph& g) {
  Graph h = g;
  h.normalize_outgoing();
  std::vector<Storyline> result;
  while (!h.edges.empty()) {
    std::map<std::size_t, double> cost;
    std::map<std::size_t, std::size_t> next;
    best_paths(h, cost, next);
    std::set<std::size_t> has_in;
    for (const auto& [e, w] : h.edges) has_in.insert(e.second);
    std::size_t src = 0;
    double best = std::numeric_limits<double>::infinity();
    for (auto v : h.nodes) {
      if (has_in.count(v) || h.out_degree(v) == 0) continue;
      if (cost[v] < best - kTieTolerance) {
        best = cost[v];
        src = v;
      }
    }
    Storyline path = follow(next, src);
    for (auto v : path) h.nodes.erase(v);
    for (auto it = h.edges.begin(); it != h.edges.end();) {
      if (!h.nodes.count(it->first.first) || !h.nodes.count(it->first.second))
        it = h.edges.erase(it);
      else
        ++it;
    }
    h.normalize_outgoing();
    result.push_back(std::move(path));
  }
  for (auto v : h.nodes) result.push_back({v});
  return result;
}

Storyline main_storyline(const Graph& g, std::size_t s) {
  if (!g.nodes.count(s)) throw ParameterError("start node " + std::to_string(s) + " is not in the graph");
  Graph h = g;
  h.normalize_outgoing();
  std::map<std::size_t, double> cost;
  std::map<std::size_t, std::size_t> next;
  best_paths(h, cost, next);
  return follow(next, s);
}

Graph transitive_reduce_storylines(const Graph& g, const std::vector<Storyline>& storylines) {
  Graph out = g;
  for (const auto& story : storylines) {
    if (story.size() < 3) continue;
    const std::set<std::size_t> members(story.begin(), story.end());
    std::vector<Edge> inner;
    for (const auto& [e, w] : g.edges)
      if (members.count(e.first) && members.count(e.second)) inner.push_back(e);
    auto reachable_without = [&](const Edge& skip) {
      std::vector<std::size_t> stack{skip.first};
      std::set<std::size_t> seen{skip.first};
      while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (const auto& e : inner) {
          if (e.first != v || e == skip || seen.count(e.second)) continue;
          if (e.second == skip.second) return true;
          seen.insert(e.second);
          stack.push_back(e.second);
        }
      }
      return false;
    };
    for (const auto& e : inner)
      if (reachable_without(e)) out.edges.erase(e);
  }
  out.normalize_outgoing();
  return out;
}

namespace {

std::map<std::size_t, std::size_t> story_index(const std::vector<Storyline>& storylines) {
  std::map<std::size_t, std::size_t> idx;
  for (std::size_t s = 0; s < storylines.size(); ++s)
    for (auto v : storylines[s]) idx[v] = s;
  return idx;
}

}  // namespace

Graph prune_interstory(const Graph& g, const std::vector<Storyline>& storylines) {
  const auto idx = story_index(storylines);
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Edge>> crossing;
  for (const auto& [e, w] : g.edges) {
    const auto a = idx.at(e.first), b = idx.at(e.second);
    if (a != b) crossing[{a, b}].push_back(e);
  }
  Graph out = g;
  for (const auto& [pair, list] : crossing) {
    if (list.size() < 3) continue;
    // Edges arrive sorted by (source, target): the first and last entries are kept.
    for (std::size_t q = 1; q + 1 < list.size(); ++q) out.edges.erase(list[q]);
  }
  out.normalize_outgoing();
  return out;
}

std::size_t NarrativeMap::storyline_of(std::size_t id) const {
  for (std::size_t s = 0; s < storylines.size(); ++s)
    if (std::find(storylines[s].begin(), storylines[s].end(), id) != storylines[s].end()) return s;
  throw NotFoundError("document " + std::to_string(id) + " is not on the map");
}

bool NarrativeMap::is_main_edge(const Edge& e) const {
  for (std::size_t q = 0; q + 1 < main_path.size(); ++q)
    if (main_path[q] == e.first && main_path[q + 1] == e.second) return true;
  return false;
}

NarrativeMap postprocess(const RawMap& raw, const ExtractionParams& params, const std::set<std::size_t>& added_nodes) {
  if (raw.status != SolverStatus::optimal) throw ParameterError("postprocess needs an optimal raw map");
  std::set<std::size_t> keep = added_nodes;
  keep.insert(params.start);
  NarrativeMap map;
  map.start = params.start;
  map.objective = raw.objective_value;
  map.minedge = raw.minedge;
  Graph g = prune_edges(raw, params.K, keep);
  g.nodes.insert(params.start);
  map.storylines = extract_storylines(g);
  g = transitive_reduce_storylines(g, map.storylines);
  g = prune_interstory(g, map.storylines);
  map.graph = std::move(g);
  map.main_storyline = map.storyline_of(params.start);
  map.main_path = main_storyline(map.graph, params.start);
  const auto idx = story_index(map.storylines);
  for (const auto& [e, w] : map.graph.edges)
    if (idx.at(e.first) != idx.at(e.second)) map.interstory_edges.insert(e);
  return map;
}

std::vector<std::string> check_map_invariants(const NarrativeMap& map, std::size_t K) {
  std::vector<std::string> v;
  const auto& g = map.graph;
  const auto limit = ceil_sqrt(K);
  for (const auto& [e, w] : g.edges) {
    if (!(e.first < e.second)) v.push_back("edge " + std::to_string(e.first) + "->" + std::to_string(e.second) + " is not chronological");
    if (!g.nodes.count(e.first) || !g.nodes.count(e.second)) v.push_back("edge endpoint missing from node set");
    if (!(w > 0.0 && w <= 1.0 + 1e-12)) v.push_back("edge weight outside (0,1]");
  }
  for (auto n : g.nodes)
    if (g.out_degree(n) > limit) v.push_back("node " + std::to_string(n) + " exceeds out-degree " + std::to_string(limit));
  std::map<std::size_t, std::size_t> seen;
  for (std::size_t s = 0; s < map.storylines.size(); ++s) {
    const auto& story = map.storylines[s];
    if (story.empty()) v.push_back("empty storyline");
    for (std::size_t q = 0; q < story.size(); ++q) {
      if (!seen.emplace(story[q], s).second) v.push_back("node " + std::to_string(story[q]) + " in two storylines");
      if (!g.nodes.count(story[q])) v.push_back("storyline node " + std::to_string(story[q]) + " not on the map");
      if (q + 1 < story.size() && !g.edges.count({story[q], story[q + 1]}))
        v.push_back("storyline " + std::to_string(s) + " is not a path in the map");
    }
  }
  if (seen.size() != g.nodes.size()) v.push_back("storylines do not cover every node");
  if (map.main_storyline >= map.storylines.size() ||
      std::find(map.storylines[map.main_storyline].begin(), map.storylines[map.main_storyline].end(), map.start) ==
          map.storylines[map.main_storyline].end())
    v.push_back("main storyline does not contain the start");
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> crossings;
  for (const auto& [e, w] : g.edges) {
    auto a = seen.find(e.first), b = seen.find(e.second);
    if (a != seen.end() && b != seen.end() && a->second != b->second) ++crossings[{a->second, b->second}];
  }
  for (const auto& [pair, count] : crossings)
    if (count > 2) v.push_back("more than two inter-story edges between storylines " + std::to_string(pair.first) + " and " + std::to_string(pair.second));
  return v;
}

std::vector<std::size_t> select_candidates(const NarrativeMap& map, const CoherenceTable& coherence,
                                           const std::set<std::size_t>& removed, std::size_t K) {
  std::vector<std::pair<double, std::size_t>> scored;
  const auto n = coherence.size();
  for (std::size_t c = 0; c < n; ++c) {
    if (map.graph.nodes.count(c) || removed.count(c)) continue;
    double best = 0.0;
    for (auto v : map.graph.nodes) best = std::max(best, coherence.at(std::min(c, v), std::max(c, v)));
    scored.emplace_back(-best, c);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::size_t> out;
  for (std::size_t q = 0; q < std::min(scored.size(), 2 * K); ++q) out.push_back(scored[q].second);
  std::sort(out.begin(), out.end());
  return out;
}

Layout layout(const NarrativeMap& map, const std::vector<std::size_t>& candidates, const CoherenceTable& coherence) {
  constexpr double kColumnWidth = 220.0, kRowHeight = 80.0, kPad = 30.0;
  Layout out;
  std::vector<std::size_t> order(map.storylines.size());
  for (std::size_t s = 0; s < order.size(); ++s) order[s] = s;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return *std::min_element(map.storylines[a].begin(), map.storylines[a].end()) <
           *std::min_element(map.storylines[b].begin(), map.storylines[b].end());
  });
  std::map<std::size_t, int> rank;
  for (auto v : map.graph.nodes) rank.emplace(v, int(rank.size()));
  for (std::size_t col = 0; col < order.size(); ++col) {
    const auto& story = map.storylines[order[col]];
    StorylineBox box{order[col], std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (auto v : story) {
      NodePlacement p;
      p.column = int(col);
      p.row = rank.at(v);
      p.x = double(col) * kColumnWidth;
      p.y = double(p.row) * kRowHeight;
      out.nodes[v] = p;
      box.x0 = std::min(box.x0, p.x - kPad);
      box.x1 = std::max(box.x1, p.x + kPad);
      box.y0 = std::min(box.y0, p.y - kPad);
      box.y1 = std::max(box.y1, p.y + kPad);
    }
    out.boxes.push_back(box);
  }

  if (candidates.empty()) return out;
  const double width = std::max<double>(1.0, double(order.size())) * kColumnWidth;
  const double height = std::max<double>(1.0, double(rank.size())) * kRowHeight;
  std::vector<std::size_t> cand;
  std::vector<double> cx, cy;
  for (auto c : candidates) {
    if (map.graph.nodes.count(c)) throw ParameterError("candidate " + std::to_string(c) + " is already on the map");
    std::mt19937_64 rng(mix64(c + 0x51ed));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    cand.push_back(c);
    cx.push_back(width + u(rng) * kColumnWidth);
    cy.push_back(u(rng) * height);
  }
  constexpr int kIterations = 120;
  for (int it = 0; it < kIterations; ++it) {
    const double step = 0.2 * (1.0 - double(it) / kIterations);
    for (std::size_t a = 0; a < cand.size(); ++a) {
      double fx = 0.0, fy = 0.0, wsum = 0.0;
      for (const auto& [v, p] : out.nodes) {
        if (p.candidate) continue;
        const double w = coherence.at(std::min(cand[a], v), std::max(cand[a], v));
        fx += w * (p.x + kColumnWidth * 0.5 - cx[a]);
        fy += w * (p.y - cy[a]);
        wsum += w;
      }
      if (wsum > 0.0) {
        fx /= wsum;
        fy /= wsum;
      }
      for (std::size_t b = 0; b < cand.size(); ++b) {
        if (a == b) continue;
        const double dx = cx[a] - cx[b], dy = cy[a] - cy[b];
        const double d2 = std::max(dx * dx + dy * dy, 1.0);
        fx += 4000.0 * dx / d2;
        fy += 4000.0 * dy / d2;
      }
      cx[a] += step * fx;
      cy[a] += step * fy;
    }
  }
  for (std::size_t a = 0; a < cand.size(); ++a) {
    NodePlacement p;
    p.candidate = true;
    p.x = std::round(cx[a] * 100.0) / 100.0;
    p.y = std::round(cy[a] * 100.0) / 100.0;
    out.nodes[cand[a]] = p;
  }
  return out;
}

MapDiff diff_maps(const NarrativeMap& before, const NarrativeMap& after) {
  MapDiff d;
  std::set_difference(after.graph.nodes.begin(), after.graph.nodes.end(), before.graph.nodes.begin(),
                      before.graph.nodes.end(), std::back_inserter(d.nodes_added));
  std::set_difference(before.graph.nodes.begin(), before.graph.nodes.end(), after.graph.nodes.begin(),
                      after.graph.nodes.end(), std::back_inserter(d.nodes_removed));
  for (const auto& [e, w] : after.graph.edges)
    if (!before.graph.edges.count(e)) d.edges_added.push_back(e);
  for (const auto& [e, w] : before.graph.edges)
    if (!after.graph.edges.count(e)) d.edges_removed.push_back(e);
  return d;
}

}  // namespace narrmap
