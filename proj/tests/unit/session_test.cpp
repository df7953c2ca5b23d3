#include <doctest.h>

#include "fixtures.hpp"
#include "narrmap/error.hpp"
#include "narrmap/serialize.hpp"
#include "narrmap/session.hpp"

using namespace narrmap;

namespace {

Session small_session(std::uint64_t seed = 1) {
  ExtractionParams p;
  p.K = 6;
  return Session::create(fixtures::synthetic(60, 11), p, seed);
}

std::string map_text(const Session& s) {
  return dump_stable(map_to_json(s.current_map(), s.corpus(), s.current_layout()));
}

}  // namespace

TEST_CASE("session creation is deterministic and validated") {
  const auto a = small_session();
  const auto b = small_session();
  CHECK(map_text(a) == map_text(b));
  CHECK(check_map_invariants(a.current_map(), 6).empty());
  CHECK(a.current_map().graph.nodes.count(0));
  CHECK_FALSE(a.projection_dirty());

  ExtractionParams too_big;
  too_big.K = 61;
  CHECK_THROWS_AS(Session::create(fixtures::synthetic(60, 11), too_big, 1), ParameterError);
}

TEST_CASE("contradictory interactions are rejected until undone") {
  auto s = small_session();
  s.apply(InteractionEvent::remove_node(3));
  CHECK_THROWS_AS(s.apply(InteractionEvent::add_node(3)), ContradictionError);
  CHECK(s.history().size() == 1);
  s.undo();
  CHECK_NOTHROW(s.apply(InteractionEvent::add_node(3)));
  CHECK_THROWS_AS(s.apply(InteractionEvent::remove_node(0)), ContradictionError);
  CHECK_THROWS_AS(s.apply(InteractionEvent::remove_node(600)), NotFoundError);
  CHECK_THROWS_AS(s.apply(InteractionEvent::add_edge(7, 2)), ParameterError);
}

TEST_CASE("cluster interactions dirty the projection, structural ones do not") {
  auto s = small_session();
  s.apply(InteractionEvent::remove_edge(1, 2));
  CHECK_FALSE(s.projection_dirty());
  CHECK(s.ledger().removed_edges.count({1, 2}));
  const auto& stored = s.apply(InteractionEvent::cluster(-1, {2, 5, 8}));
  CHECK(stored.cluster_id == 0);
  CHECK(s.ledger().user_clusters.at(0) == std::set<std::size_t>{2, 5, 8});
  CHECK(s.projection_dirty());
  s.regenerate();
  CHECK_FALSE(s.projection_dirty());
  CHECK(s.projection().supervised);
}

TEST_CASE("regenerated maps honour the ledger") {
  auto s = small_session();
  s.apply(InteractionEvent::remove_node(3));
  s.apply(InteractionEvent::add_edge(2, 7));
  s.apply(InteractionEvent::cluster(-1, {10, 20, 30}));
  s.regenerate();
  const auto& raw = s.raw_map();
  CHECK(raw.node_weights[3] <= 1e-7);
  CHECK_FALSE(s.current_map().graph.nodes.count(3));
  CHECK(raw.edge_weight(2, 7) >= 0.01 - 1e-7);
  for (std::size_t i : {10u, 20u, 30u}) {
    double sum = 0.0;
    for (std::size_t j : {10u, 20u, 30u})
      if (i != j) sum += raw.edge_weight(std::min(i, j), std::max(i, j));
    CHECK(sum >= 0.05 - 1e-7);
    CHECK(raw.node_weights[i] >= 0.01 - 1e-7);
  }
  s.regenerate();
  CHECK_FALSE(s.current_map().graph.nodes.count(3));
}

TEST_CASE("staged interactions leave the map alone until regeneration") {
  auto s = small_session();
  const auto before = map_text(s);
  const auto victim = *std::next(s.current_map().graph.nodes.begin());
  s.apply(InteractionEvent::remove_node(victim));
  CHECK(map_text(s) == before);
  CHECK(s.basis() == 0);
  s.regenerate();
  CHECK(s.basis() == 1);
  CHECK_FALSE(s.current_map().graph.nodes.count(victim));
}

TEST_CASE("undo") {
  auto s = small_session();
  CHECK_THROWS_AS(s.undo(), ParameterError);
  s.apply(InteractionEvent::remove_node(3));
  s.apply(InteractionEvent::remove_node(4));
  s.apply(InteractionEvent::add_edge(5, 9));
  const auto undone = s.undo();
  CHECK(undone.kind == InteractionKind::add_edge);
  CHECK(s.history().size() == 2);
  s.undo();
  s.undo();
  s.regenerate();
  CHECK(s.ledger().empty());
}

TEST_CASE("snapshots round trip") {
  fixtures::TempDir dir;
  const auto corpus = fixtures::synthetic(60, 11);
  save_corpus(*corpus, dir / "c.jsonl");
  ExtractionParams p;
  auto s = Session::create(corpus, p, 3);
  s.apply(InteractionEvent::remove_node(3));
  s.apply(InteractionEvent::cluster(-1, {10, 20, 30}));
  s.regenerate();
  s.apply(InteractionEvent::add_edge(2, 7));
  save_session(s, dir / "s.json", dir / "c.jsonl");

  auto back = load_session(dir / "s.json");
  CHECK(session_snapshot(back, dir / "c.jsonl") == fixtures::read_text(dir / "s.json"));
  CHECK(map_text(back) == map_text(s));
  s.regenerate();
  back.regenerate();
  CHECK(map_text(back) == map_text(s));

  const auto text = fixtures::read_text(dir / "s.json");
  fixtures::write_text(dir / "cut.json", text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_session(dir / "cut.json"), SnapshotError);
}

TEST_CASE("ledger folding") {
  const std::vector<InteractionEvent> history{InteractionEvent::remove_node(2), InteractionEvent::add_edge(3, 5),
                                              InteractionEvent::cluster(-1, {6, 7}),
                                              InteractionEvent::cluster(0, {8})};
  const auto l = ledger_from_history(history, 10);
  CHECK(l.removed_nodes == std::set<std::size_t>{2});
  CHECK(l.added_edges == std::set<Edge>{{3, 5}});
  CHECK(l.user_clusters.at(0) == std::set<std::size_t>{6, 7, 8});
  CHECK_THROWS_AS(ledger_from_history({InteractionEvent::add_edge(3, 5), InteractionEvent::remove_edge(3, 5)}, 10),
                  ContradictionError);
}
