#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "narrmap/error.hpp"
#include "narrmap/simulation.hpp"

using namespace narrmap;

namespace {

struct Spec {
  Leaning leaning = Leaning::none;
  std::vector<std::string> keywords;
};

Corpus corpus_with(std::size_t n, const std::map<std::size_t, Spec>& specs) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    auto d = fixtures::doc(double(i), {1.0, double(i)});
    if (auto it = specs.find(i); it != specs.end()) {
      d.leaning = it->second.leaning;
      d.keywords = it->second.keywords;
    }
    docs.push_back(std::move(d));
  }
  return fixtures::corpus_of(std::move(docs));
}

NarrativeMap map_of(std::set<std::size_t> nodes, std::vector<Edge> edges, std::vector<Storyline> storylines,
                    std::size_t start = 0) {
  NarrativeMap m;
  m.graph.nodes = std::move(nodes);
  for (const auto& e : edges) m.graph.edges[e] = 1.0;
  m.storylines = std::move(storylines);
  m.start = start;
  return m;
}

/// Each node as its own storyline.
std::vector<Storyline> singletons(const std::set<std::size_t>& nodes) {
  std::vector<Storyline> out;
  for (auto v : nodes) out.push_back({v});
  return out;
}

TaskSpec spec_for(Task t, std::vector<std::string> labels) {
  TaskSpec s;
  s.task = t;
  for (const auto& l : labels) s.labels.push_back(DocPredicate::parse(l));
  return s;
}

const Spec L{Leaning::left, {}};
const Spec R{Leaning::right, {}};
const Spec C{Leaning::center, {}};
const Spec FL{Leaning::none, {"florida"}};
const Spec BI{Leaning::none, {"biden"}};

}  // namespace

TEST_CASE("task names") {
  CHECK(parse_task("T4") == Task::T4);
  CHECK(to_string(Task::T2) == "T2");
  CHECK_THROWS_AS(parse_task("T9"), ParameterError);
}

TEST_CASE("document predicates") {
  auto c = corpus_with(4, {{0, {Leaning::left, {"florida"}}}, {1, FL}, {2, C}});
  c.documents[3].source = "Reuters";
  const auto p = DocPredicate::parse("keyword:florida & !leaning:left | source:reuters");
  CHECK_FALSE(p(c[0]));
  CHECK(p(c[1]));
  CHECK_FALSE(p(c[2]));
  CHECK(p(c[3]));
  CHECK(p.text() == "keyword:florida & !leaning:left | source:reuters");
  CHECK(DocPredicate::parse("leaning:Center")(c[2]));
  CHECK_THROWS_AS(DocPredicate::parse(""), ParameterError);
  CHECK_THROWS_AS(DocPredicate::parse("florida"), ParameterError);
  CHECK_THROWS_AS(DocPredicate::parse("topic:florida"), ParameterError);
  CHECK_THROWS_AS(DocPredicate::parse("keyword:"), ParameterError);
  CHECK_THROWS_AS(DocPredicate::parse("leaning:sideways"), ParameterError);
}

TEST_CASE("inconsistent edges join opposite leanings only") {
  const auto c = corpus_with(4, {{0, L}, {1, R}, {2, C}});
  CHECK(is_inconsistent_edge({0, 1}, c));
  CHECK_FALSE(is_inconsistent_edge({0, 2}, c));
  CHECK_FALSE(is_inconsistent_edge({3, 1}, c));
}

TEST_CASE("storyline leaning") {
  const auto c = corpus_with(6, {{0, L}, {1, L}, {2, C}, {3, R}, {4, C}, {5, R}});
  CHECK(storyline_leaning({0, 1, 2, 3}, c) == Leaning::left);
  CHECK(storyline_leaning({0, 3}, c) == Leaning::left);
  CHECK(storyline_leaning({3, 1}, c) == Leaning::right);
  CHECK(storyline_leaning({2, 4}, c) == Leaning::none);
  CHECK(storyline_leaning({1, 3, 5}, c) == Leaning::right);
}

TEST_CASE("cluster connectivity") {
  const auto m = map_of({0, 1, 2, 3, 4, 5, 6}, {{0, 1}, {1, 2}, {3, 4}, {3, 5}, {0, 6}},
                        {{0, 1, 2}, {3, 4}, {5}, {6}});
  SUBCASE("direct edge") { CHECK(is_connected_in_cluster(0, {0, 6}, m)); }
  SUBCASE("same storyline without an edge") { CHECK(is_connected_in_cluster(0, {0, 2}, m)); }
  SUBCASE("shared predecessor") { CHECK(is_connected_in_cluster(4, {4, 5}, m)); }
  SUBCASE("sole member on the map") {
    CHECK_FALSE(is_connected_in_cluster(5, {5}, m));
    CHECK_FALSE(is_connected_in_cluster(5, {5, 40}, m));
  }
  SUBCASE("unrelated members") { CHECK_FALSE(is_connected_in_cluster(2, {2, 5}, m)); }
}

TEST_CASE("error metrics") {
  SUBCASE("T1 counts irrelevant nodes") {
    const auto c = corpus_with(10, {{4, FL}, {9, FL}});
    std::set<std::size_t> nodes{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    const auto m = map_of(nodes, {}, singletons(nodes));
    CHECK(error_metric(spec_for(Task::T1, {"keyword:florida"}), m, c) == doctest::Approx(0.2));
  }
  SUBCASE("T2 counts inconsistent edges") {
    const auto c = corpus_with(4, {{0, L}, {1, C}, {2, L}, {3, R}});
    const auto clean = map_of({0, 1, 2}, {{0, 1}, {1, 2}}, {{0, 1, 2}});
    CHECK(error_metric(spec_for(Task::T2, {}), clean, c) == 0.0);
    const auto dirty = map_of({0, 1, 2, 3}, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, {{0, 1, 2, 3}});
    CHECK(error_metric(spec_for(Task::T2, {}), dirty, c) == doctest::Approx(0.5));
    CHECK(error_metric(spec_for(Task::T2, {}), map_of({0}, {}, {{0}}), c) == 0.0);
  }
  SUBCASE("T3 counts nodes against their storyline") {
    const auto c = corpus_with(4, {{0, L}, {1, L}, {2, R}, {3, L}});
    const auto m = map_of({0, 1, 2, 3}, {{0, 1}, {1, 2}, {2, 3}}, {{0, 1, 2, 3}});
    CHECK(error_metric(spec_for(Task::T3, {}), m, c) == doctest::Approx(0.25));
  }
  SUBCASE("T4 counts unconnected relevant nodes") {
    const auto c = corpus_with(8, {{1, FL}, {2, FL}, {4, FL}, {6, FL}});
    const auto m = map_of({0, 1, 2, 3, 4, 5, 6}, {{0, 1}, {1, 2}, {3, 4}, {0, 6}}, {{0, 1, 2}, {3, 4}, {5}, {6}});
    CHECK(error_metric(spec_for(Task::T4, {"keyword:florida"}), m, c) == doctest::Approx(0.25));
    CHECK(error_metric(spec_for(Task::T4, {"keyword:ohio"}), m, c) == 1.0);
  }
  SUBCASE("T4 clusters are scored separately") {
    const auto c = corpus_with(4, {{0, FL}, {1, BI}, {2, FL}, {3, BI}});
    const auto m = map_of({0, 1, 2, 3}, {{0, 1}, {1, 2}, {2, 3}}, {{0, 1, 2, 3}});
    CHECK(error_metric(spec_for(Task::T4, {"keyword:florida", "keyword:biden"}), m, c) == 0.0);
    const auto split = map_of({0, 1, 2, 3}, {}, singletons({0, 1, 2, 3}));
    CHECK(error_metric(spec_for(Task::T4, {"keyword:florida", "keyword:biden"}), split, c) == 1.0);
  }
}

TEST_CASE("T1 analyst removes every irrelevant node") {
  const auto c = corpus_with(10, {{4, FL}, {9, FL}});
  std::set<std::size_t> nodes{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto spec = spec_for(Task::T1, {"keyword:florida"});
  const auto events = analyst_step(spec, map_of(nodes, {}, singletons(nodes)), c, {});
  CHECK(events == std::vector<InteractionEvent>{InteractionEvent::remove_node(4), InteractionEvent::remove_node(9)});

  nodes.erase(4);
  nodes.erase(9);
  const auto clean = map_of(nodes, {}, singletons(nodes));
  CHECK(error_metric(spec, clean, c) == 0.0);
  CHECK(analyst_step(spec, clean, c, {}).empty());
}

TEST_CASE("T2 analyst removes inconsistent edges") {
  const auto c = corpus_with(5, {{0, C}, {1, L}, {2, R}, {3, L}, {4, C}});
  const auto m = map_of({0, 1, 2, 3, 4}, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}, {{0, 1, 2, 3, 4}});
  auto spec = spec_for(Task::T2, {});
  CHECK(analyst_step(spec, m, c, {}) ==
        std::vector<InteractionEvent>{InteractionEvent::remove_edge(1, 2), InteractionEvent::remove_edge(2, 3)});

  SUBCASE("node reading removes the later endpoint, sparing the start") {
    spec.t2_remove_nodes = true;
    auto started = m;
    started.start = 2;
    CHECK(analyst_step(spec, started, c, {}) ==
          std::vector<InteractionEvent>{InteractionEvent::remove_node(1), InteractionEvent::remove_node(3)});
  }
  SUBCASE("nothing to do on a consistent map") {
    const auto clean = map_of({0, 1, 4}, {{0, 1}, {1, 4}}, {{0, 1, 4}});
    CHECK(analyst_step(spec, clean, c, {}).empty());
  }
}

TEST_CASE("T3 analyst cuts out the inconsistent node and bridges the gap") {
  const auto c = corpus_with(5, {{0, L}, {1, L}, {2, R}, {3, L}, {4, C}});
  const auto m = map_of({0, 1, 2, 3, 4}, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}, {{0, 1, 2, 3, 4}});
  const auto events = analyst_step(spec_for(Task::T3, {}), m, c, {});
  CHECK(events == std::vector<InteractionEvent>{InteractionEvent::remove_edge(1, 2), InteractionEvent::remove_edge(2, 3),
                                                InteractionEvent::add_edge(1, 3)});
}

TEST_CASE("T4 analyst clusters relevant nodes per label") {
  const auto c = corpus_with(6, {{1, FL}, {2, BI}, {3, FL}, {4, BI}, {5, FL}});
  const auto m = map_of({0, 1, 2, 3, 4}, {}, singletons({0, 1, 2, 3, 4}));
  const auto spec = spec_for(Task::T4, {"keyword:florida", "keyword:biden"});
  CHECK(analyst_step(spec, m, c, {}) ==
        std::vector<InteractionEvent>{InteractionEvent::cluster(-1, {1, 3}), InteractionEvent::cluster(-1, {2, 4})});

  SUBCASE("existing clusters are extended, not duplicated") {
    ConstraintLedger ledger;
    ledger.user_clusters[0] = {2};
    ledger.user_clusters[1] = {1, 3};
    auto grown = m;
    grown.graph.nodes.insert(5);
    grown.storylines.push_back({5});
    CHECK(analyst_step(spec, grown, c, ledger) ==
          std::vector<InteractionEvent>{InteractionEvent::cluster(1, {5}), InteractionEvent::cluster(0, {4})});
  }
}

TEST_CASE("T5 analyst adds the first tenth of missing relevant events") {
  std::map<std::size_t, Spec> specs{{1, FL}, {2, FL}};
  for (std::size_t i = 10; i < 40; ++i) specs[i] = FL;
  const auto c = corpus_with(40, specs);
  const auto m = map_of({0, 1, 2, 3}, {{0, 1}, {2, 3}}, {{0, 1}, {2, 3}});
  const auto spec = spec_for(Task::T5, {"keyword:florida"});
  const auto events = analyst_step(spec, m, c, {});
  CHECK(events == std::vector<InteractionEvent>{InteractionEvent::cluster(-1, {1, 2}), InteractionEvent::add_node(10),
                                                InteractionEvent::add_node(11), InteractionEvent::add_node(12)});

  ConstraintLedger ledger;
  ledger.added_nodes = {10, 11, 12};
  ledger.removed_nodes = {13};
  ledger.user_clusters[0] = {1, 2};
  const auto next = analyst_step(spec, m, c, ledger);
  REQUIRE(next.size() == 3);
  CHECK(next[0] == InteractionEvent::add_node(14));
  CHECK(next[2] == InteractionEvent::add_node(16));
}

TEST_CASE("start selection") {
  const auto c = corpus_with(5, {{2, C}, {4, C}});
  CHECK(find_start(c, DocPredicate::parse("leaning:center")) == 2);
  CHECK_THROWS_AS(find_start(c, DocPredicate::parse("leaning:right")), NotFoundError);
}

TEST_CASE("aggregation carries finished samples forward") {
  SimulationResult r;
  r.task = Task::T1;
  SampleResult a, b;
  a.seed = 1;
  a.iterations = {{0, 0.5, 10, 9, 5.0, 2}, {1, 0.0, 8, 8, 5.0, 0}};
  a.converged_at = 1;
  b.seed = 2;
  b.iterations = {{0, 0.3, 10, 7, 5.0, 1}, {1, 0.1, 9, 10, 5.0, 1}, {2, 0.0, 9, 8, 5.0, 0}};
  b.converged_at = 2;
  r.samples = {a, b};

  const auto agg = r.aggregate();
  REQUIRE(agg.size() == 3);
  CHECK(agg[0].mean_error == doctest::Approx(0.4));
  CHECK(agg[0].sd_error == doctest::Approx(std::sqrt(0.02)));
  CHECK(agg[1].mean_error == doctest::Approx(0.05));
  CHECK(agg[2].mean_error == 0.0);
  CHECK(agg[2].mean_nodes == doctest::Approx(8.5));
  CHECK(r.converged_within(1) == 1);
  CHECK(r.converged_within(2) == 2);
  CHECK(mean_edge_increase(r) == doctest::Approx((0.0 + 3.0) / 2.0));

  std::ostringstream samples, aggregate;
  write_samples_csv(samples, r);
  write_aggregate_csv(aggregate, r);
  const auto s = samples.str();
  CHECK(s.rfind("task,sample,seed,iteration,error,nodes,edges,edge_weight_sum,interactions\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 6);
  CHECK(s.find("T1,1,2,2,0,9,8,5,0\n") != std::string::npos);
  const auto g = aggregate.str();
  CHECK(g.rfind("task,iteration,mean_error,sd_error,mean_nodes,mean_edges\n", 0) == 0);
  CHECK(std::count(g.begin(), g.end(), '\n') == 4);
}

TEST_CASE("simulated samples are reproducible") {
  const auto corpus = fixtures::synthetic(80, 7, {{"florida", 0.2, 0.0}});
  auto spec = spec_for(Task::T1, {"keyword:florida"});
  spec.max_iterations = 6;
  ExtractionParams p;
  p.start = find_start(*corpus, DocPredicate::parse("!keyword:florida"));
  const auto a = run_sample(spec, corpus, p, 3);
  const auto b = run_sample(spec, corpus, p, 3);
  REQUIRE_FALSE(a.iterations.empty());
  REQUIRE(a.iterations.size() == b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    CHECK(a.iterations[i].error == b.iterations[i].error);
    CHECK(a.iterations[i].edges == b.iterations[i].edges);
    CHECK(a.iterations[i].error >= 0.0);
    CHECK(a.iterations[i].error <= 1.0);
  }
  CHECK(a.converged_at == b.converged_at);
  if (a.converged_at) CHECK(a.iterations.back().error == 0.0);
}

TEST_CASE("samples that start at the target are discarded") {
  const auto corpus = fixtures::synthetic(40, 7);
  auto spec = spec_for(Task::T1, {"keyword:nowhere"});
  spec.samples = 2;
  spec.max_seed_draws = 3;
  SimulationSetup setup;
  setup.start = DocPredicate::parse("leaning:center|leaning:left|leaning:right|leaning:none");
  std::size_t maps = 0;
  setup.on_map = [&](const Session&) { ++maps; };
  const auto r = simulate_task(spec, corpus, setup);
  CHECK(r.samples.empty());
  CHECK(r.discarded_seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(maps == 3);
}
