// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <vector>

#include "narrmap/extraction.hpp"

namespace narrmap {

using Storyline = std::vector<std::size_t>;

/// Weighted directed graph over document ids; every edge (i, j) has i < j.
struct Graph {
  std::set<std::size_t> nodes;
  std::map<Edge, double> edges;

  std::vector<std::pair<std::size_t, double>> successors(std::size_t v) const;
  std::size_t out_degree(std::size_t v) const;
  std::size_t in_degree(std::size_t v) const;
  /// Rescales each node's outgoing weights to sum to one.
  void normalize_outgoing();
  bool operator==(const Graph&) const = default;
};

/// Smallest r with r * r >= K.
std::size_t ceil_sqrt(std::size_t K);

/// Keeps the ceil(sqrt(K)) heaviest outgoing edges per node, renormalizes, and drops
/// edges below 0.1 / K. Edgeless nodes survive only if listed in `keep_isolated`.
Graph prune_edges(const RawMap& raw, std::size_t K, const std::set<std::size_t>& keep_isolated);

/// Repeatedly removes the maximum-likelihood source-to-sink path; leftover nodes
/// become singleton storylines.
std::vector<Storyline> extract_storylines(const Graph& g);

/// Maximum-likelihood path from `s` to a sink, ties broken towards the
/// lexicographically smallest id sequence.
Storyline main_storyline(const Graph& g, std::size_t s);

/// Removes transitive shortcuts inside each storyline, then renormalizes.
Graph transitive_reduce_storylines(const Graph& g, const std::vector<Storyline>& storylines);

/// Keeps only the first and last crossing edge of every ordered storyline pair,
/// then renormalizes.
Graph prune_interstory(const Graph& g, const std::vector<Storyline>& storylines);

struct NarrativeMap {
  Graph graph;
  std::vector<Storyline> storylines;
  std::size_t main_storyline = 0;  // index of the storyline holding the start
  Storyline main_path;             // maximum-likelihood path from the start
  std::set<Edge> interstory_edges;
  std::size_t start = 0;
  double objective = 0.0;
  double minedge = 0.0;

  std::size_t storyline_of(std::size_t id) const;
  bool is_main_edge(const Edge& e) const;
  bool operator==(const NarrativeMap&) const = default;
};

NarrativeMap postprocess(const RawMap& raw, const ExtractionParams& params, const std::set<std::size_t>& added_nodes = {});

/// Human-readable violations of the map invariants; empty when all hold.
std::vector<std::string> check_map_invariants(const NarrativeMap& map, std::size_t K);

/// The top 2K documents outside the map (and not removed) by best coherence to a map node.
std::vector<std::size_t> select_candidates(const NarrativeMap& map, const CoherenceTable& coherence,
                                           const std::set<std::size_t>& removed, std::size_t K);

struct NodePlacement {
  double x = 0.0;
  double y = 0.0;
  int column = -1;  // storyline column; -1 for candidates
  int row = -1;     // chronological rank among map nodes; -1 for candidates
  bool candidate = false;
  bool operator==(const NodePlacement&) const = default;
};

struct StorylineBox {
  std::size_t storyline = 0;
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool operator==(const StorylineBox&) const = default;
};

struct Layout {
  std::map<std::size_t, NodePlacement> nodes;
  std::vector<StorylineBox> boxes;
  bool operator==(const Layout&) const = default;
};

Layout layout(const NarrativeMap& map, const std::vector<std::size_t>& candidates, const CoherenceTable& coherence);

struct MapDiff {
  std::vector<std::size_t> nodes_added, nodes_removed;
  std::vector<Edge> edges_added, edges_removed;
};

MapDiff diff_maps(const NarrativeMap& before, const NarrativeMap& after);

}  // namespace narrmap
