#include <doctest.h>

#include <cmath>

#include "../common/oracles.hpp"
#include "narrmap/coherence.hpp"
#include "narrmap/error.hpp"
#include "narrmap/structure.hpp"

using namespace narrmap;

namespace {

Graph graph_of(std::set<std::size_t> nodes, std::map<Edge, double> edges) {
  Graph g;
  g.nodes = std::move(nodes);
  g.edges = std::move(edges);
  return g;
}

RawMap raw_of(std::size_t n, std::map<Edge, double> edges) {
  RawMap r;
  r.n = n;
  r.node_weights.assign(n, 0.0);
  for (const auto& [e, w] : edges) {
    r.node_weights[e.first] = 1.0;
    r.node_weights[e.second] = 1.0;
  }
  r.edge_weights = std::move(edges);
  r.status = SolverStatus::optimal;
  r.minedge = 0.9;
  r.objective_value = 0.9;
  return r;
}

CoherenceTable flat_table(std::size_t n, double v) { return CoherenceTable(n, 30.0, std::vector<double>(n * (n - 1) / 2, v)); }

}  // namespace

TEST_CASE("pruning keeps the ceil(sqrt K) heaviest outgoing edges") {
  CHECK(ceil_sqrt(6) == 3);
  CHECK(ceil_sqrt(9) == 3);
  CHECK(ceil_sqrt(10) == 4);
  const auto raw = raw_of(7, {{{0, 1}, 0.4}, {{0, 2}, 0.3}, {{0, 3}, 0.2}, {{0, 4}, 0.05}, {{0, 5}, 0.05}, {{5, 6}, 0.5}});
  const auto g = prune_edges(raw, 6, {});
  CHECK(g.out_degree(0) == 3);
  CHECK_FALSE(g.edges.count({0, 4}));
  CHECK_FALSE(g.edges.count({0, 5}));
  CHECK(g.edges.at({0, 1}) == doctest::Approx(0.4 / 0.9));
  CHECK(g.edges.at({5, 6}) == doctest::Approx(1.0));
}

TEST_CASE("pruning drops renormalized edges under 0.1 / K") {
  CHECK(0.1 / 6 == doctest::Approx(0.01667).epsilon(1e-3));
  const auto raw = raw_of(4, {{{0, 1}, 0.99}, {{0, 2}, 0.01}, {{1, 3}, 0.5}});
  const auto g = prune_edges(raw, 6, {});
  CHECK_FALSE(g.edges.count({0, 2}));
  CHECK_FALSE(g.nodes.count(2));
  CHECK(g.edges.at({0, 1}) == doctest::Approx(0.99));
}

TEST_CASE("nodes under the out-degree limit keep every edge") {
  const auto raw = raw_of(3, {{{0, 1}, 0.5}, {{0, 2}, 0.5}});
  CHECK(prune_edges(raw, 9, {}).out_degree(0) == 2);
}

TEST_CASE("storyline extraction examples") {
  const auto g = graph_of({0, 1, 2, 3}, {{{0, 1}, 0.9}, {{0, 3}, 0.1}, {{1, 2}, 1.0}});
  CHECK(extract_storylines(g) == std::vector<Storyline>{{0, 1, 2}, {3}});
  CHECK(oracles::max_product_path(g) == Storyline{0, 1, 2});
  CHECK(main_storyline(g, 0) == Storyline{0, 1, 2});

  CHECK(extract_storylines(graph_of({4, 9}, {})) == std::vector<Storyline>{{4}, {9}});
  CHECK(extract_storylines(graph_of({0, 1, 2}, {{{0, 1}, 1.0}, {{1, 2}, 1.0}})) == std::vector<Storyline>{{0, 1, 2}});
}

TEST_CASE("main storyline tie-break and isolated start") {
  const auto tree = graph_of({0, 1, 2, 3, 4, 5, 6},
                             {{{0, 1}, 1}, {{0, 2}, 1}, {{1, 3}, 1}, {{1, 4}, 1}, {{2, 5}, 1}, {{2, 6}, 1}});
  CHECK(main_storyline(tree, 0) == Storyline{0, 1, 3});
  CHECK(main_storyline(graph_of({0, 1, 5}, {{{0, 1}, 1.0}}), 5) == Storyline{5});
  CHECK_THROWS_AS(main_storyline(tree, 42), ParameterError);
}

TEST_CASE("transitive reduction inside storylines") {
  SUBCASE("classic shortcut") {
    const auto g = graph_of({0, 1, 2}, {{{0, 1}, 1}, {{1, 2}, 1}, {{0, 2}, 1}});
    const auto r = transitive_reduce_storylines(g, {{0, 1, 2}});
    CHECK(oracles::edge_set(r) == std::set<Edge>{{0, 1}, {1, 2}});
  }
  SUBCASE("heavier shortcut is still transitive") {
    const auto g = graph_of({0, 1, 2}, {{{0, 1}, 0.9}, {{1, 2}, 0.9}, {{0, 2}, 0.95}});
    const auto r = transitive_reduce_storylines(g, {{0, 1, 2}});
    CHECK(oracles::edge_set(r) == oracles::reduced_edges(g, {{0, 1, 2}}));
    CHECK_FALSE(r.edges.count({0, 2}));
  }
  SUBCASE("inter-story edges are preserved") {
    const auto g = graph_of({0, 1, 2, 3, 4}, {{{0, 1}, 1}, {{1, 2}, 1}, {{0, 3}, 1}, {{3, 4}, 1}, {{0, 4}, 1}});
    const auto r = transitive_reduce_storylines(g, {{0, 1, 2}, {3, 4}});
    CHECK(r.edges.count({0, 3}));
    CHECK(r.edges.count({0, 4}));
  }
}

TEST_CASE("inter-story pruning keeps the first and last crossing") {
  const std::vector<Storyline> stories{{0, 2, 5, 9}, {10, 11, 12}};
  std::map<Edge, double> edges{{{0, 2}, 1}, {{2, 5}, 1}, {{5, 9}, 1}, {{10, 11}, 1}, {{11, 12}, 1}};
  SUBCASE("three crossings") {
    auto e = edges;
    e[{2, 10}] = 0.5;
    e[{5, 11}] = 0.5;
    e[{9, 12}] = 0.5;
    const auto r = prune_interstory(graph_of({0, 2, 5, 9, 10, 11, 12}, e), stories);
    CHECK(r.edges.count({2, 10}));
    CHECK_FALSE(r.edges.count({5, 11}));
    CHECK(r.edges.count({9, 12}));
  }
  SUBCASE("two crossings") {
    auto e = edges;
    e[{2, 10}] = 0.5;
    e[{9, 12}] = 0.5;
    const auto r = prune_interstory(graph_of({0, 2, 5, 9, 10, 11, 12}, e), stories);
    CHECK(r.edges.count({2, 10}));
    CHECK(r.edges.count({9, 12}));
  }
  SUBCASE("one crossing") {
    auto e = edges;
    e[{5, 11}] = 0.5;
    CHECK(prune_interstory(graph_of({0, 2, 5, 9, 10, 11, 12}, e), stories).edges.count({5, 11}));
  }
}

TEST_CASE("postprocessing a chain") {
  ExtractionParams p;
  p.K = 3;
  const auto map = postprocess(raw_of(3, {{{0, 1}, 1.0}, {{1, 2}, 1.0}}), p);
  REQUIRE(map.storylines.size() == 1);
  CHECK(map.storylines[0] == Storyline{0, 1, 2});
  CHECK(map.main_storyline == 0);
  CHECK(map.main_path == Storyline{0, 1, 2});
  CHECK(map.is_main_edge({0, 1}));
  CHECK(check_map_invariants(map, 3).empty());
}

TEST_CASE("postprocessing enforces the out-degree bound and is idempotent") {
  std::map<Edge, double> dense;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = i + 1; j < 8; ++j) dense[{i, j}] = 0.1 + 0.01 * double(i + j);
  ExtractionParams p;
  p.K = 4;
  const auto map = postprocess(raw_of(8, dense), p);
  for (auto v : map.graph.nodes) CHECK(map.graph.out_degree(v) <= ceil_sqrt(4));
  CHECK(check_map_invariants(map, 4).empty());

  RawMap again = raw_of(8, map.graph.edges);
  const auto twice = postprocess(again, p);
  CHECK(twice.graph == map.graph);
  CHECK(twice.storylines == map.storylines);
}

TEST_CASE("postprocessing keeps the start and added isolated nodes") {
  ExtractionParams p;
  p.K = 3;
  p.start = 0;
  auto raw = raw_of(5, {{{1, 2}, 1.0}});
  raw.node_weights[0] = 1.0;
  raw.node_weights[4] = 0.05;
  const auto map = postprocess(raw, p, {4});
  CHECK(map.graph.nodes.count(0));
  CHECK(map.graph.nodes.count(4));
  CHECK(map.main_path == Storyline{0});
}

TEST_CASE("brute-force oracles on random DAGs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const auto g = oracles::random_dag(rng);
    CAPTURE(trial);
    const auto stories = extract_storylines(g);
    if (!g.edges.empty()) CHECK(stories.front() == oracles::max_product_path(g));
    std::set<std::size_t> covered;
    for (const auto& s : stories)
      for (auto v : s) CHECK(covered.insert(v).second);
    CHECK(covered == g.nodes);
    CHECK(oracles::edge_set(transitive_reduce_storylines(g, stories)) == oracles::reduced_edges(g, stories));
  }
}

TEST_CASE("layout orders storyline columns by first event") {
  NarrativeMap map;
  map.graph = graph_of({0, 1, 2, 3}, {{{0, 2}, 1.0}, {{1, 3}, 1.0}});
  map.storylines = {{1, 3}, {0, 2}};
  map.main_storyline = 1;
  map.main_path = {0, 2};
  const auto table = flat_table(6, 0.5);
  const auto l = layout(map, {}, table);
  CHECK(l.nodes.at(0).column == 0);
  CHECK(l.nodes.at(1).column == 1);
  CHECK(l.nodes.at(0).row == 0);
  CHECK(l.nodes.at(3).row == 3);
  CHECK(l.boxes.size() == 2);
  for (const auto& [id, p] : l.nodes) CHECK_FALSE(p.candidate);
  CHECK(layout(map, {}, table) == l);

  const auto with = layout(map, {4, 5}, table);
  CHECK(with.nodes.at(4).candidate);
  CHECK(with == layout(map, {4, 5}, table));
}

TEST_CASE("candidates are the best-connected documents outside the map") {
  NarrativeMap map;
  map.graph = graph_of({0, 1}, {{{0, 1}, 1.0}});
  std::vector<double> packed(15, 0.1);
  packed[pair_index(6, 1, 4)] = 0.9;
  packed[pair_index(6, 0, 3)] = 0.8;
  const CoherenceTable table(6, 30.0, packed);
  CHECK(select_candidates(map, table, {}, 1) == std::vector<std::size_t>{3, 4});
  CHECK(select_candidates(map, table, {4}, 1) == std::vector<std::size_t>{2, 3});
}

TEST_CASE("map diff is a pair of set differences") {
  NarrativeMap a, b;
  a.graph = graph_of({0, 1, 2}, {{{0, 1}, 1}, {{1, 2}, 1}});
  b.graph = graph_of({0, 1, 3}, {{{0, 1}, 1}, {{1, 3}, 1}});
  const auto d = diff_maps(a, b);
  CHECK(d.nodes_added == std::vector<std::size_t>{3});
  CHECK(d.nodes_removed == std::vector<std::size_t>{2});
  CHECK(d.edges_added == std::vector<Edge>{{1, 3}});
  CHECK(d.edges_removed == std::vector<Edge>{{1, 2}});
}

TEST_CASE("invariant checker reports violations") {
  NarrativeMap bad;
  bad.graph = graph_of({0, 1, 2, 3, 4}, {{{0, 1}, 0.25}, {{0, 2}, 0.25}, {{0, 3}, 0.25}, {{0, 4}, 0.25}});
  bad.storylines = {{0, 1}, {2}, {3}, {4}};
  CHECK_FALSE(check_map_invariants(bad, 4).empty());
}
