#include <doctest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "narrmap/coherence.hpp"
#include "narrmap/error.hpp"
#include "narrmap/extraction.hpp"
#include "narrmap/projection.hpp"

using namespace narrmap;

namespace {

CoherenceTable table_of(std::size_t n, const std::map<Edge, double>& values, double fill = 0.0) {
  std::vector<double> packed(n * (n - 1) / 2, fill);
  for (const auto& [e, v] : values) packed[pair_index(n, e.first, e.second)] = v;
  return CoherenceTable(n, 30.0, std::move(packed));
}

MembershipTensor single_cluster(std::size_t n) { return MembershipTensor(Eigen::MatrixXd::Ones(Eigen::Index(n), 1)); }

struct Pipeline {
  CoherenceTable coherence;
  MembershipTensor membership;
};

Pipeline pipeline(const Corpus& c, std::uint64_t seed) {
  const auto space = project(c, build_label_vector(c.size(), {}), seed);
  const auto clusters = soft_cluster(space, default_min_cluster_size(c.size()), seed);
  return {coherence_table(space, clusters, c, 30.0), edge_membership(clusters)};
}

bool has_row(const LpModel& m, RowKind kind, const std::string& label) {
  const auto rows = m.rows_of(kind);
  return std::any_of(rows.begin(), rows.end(), [&](const LpRow* r) { return r->label == label; });
}

}  // namespace

TEST_CASE("default lambda is the inverse number of candidate edges") {
  for (std::size_t n : {2u, 160u, 500u}) CHECK(lambda_default(n) == doctest::Approx(2.0 / (double(n) * double(n - 1))));
  CHECK(lambda_default(160) == doctest::Approx(7.8616e-5).epsilon(1e-4));
  CHECK(lambda_default(2) == doctest::Approx(1.0));
  CHECK(lambda_default(500) == doctest::Approx(8.0160e-6).epsilon(1e-4));
  ExtractionParams p;
  CHECK(p.lambda_for(10) == doctest::Approx(lambda_default(10)));
  p.lambda = 0.0;
  CHECK(p.lambda_for(10) == 0.0);
}

TEST_CASE("parameter validation") {
  ExtractionParams p;
  CHECK_NOTHROW(validate_params(p, 10));
  p.K = 11;
  CHECK_THROWS_AS(validate_params(p, 10), ParameterError);
  p.K = 6;
  p.mincover = 1.5;
  CHECK_THROWS_AS(validate_params(p, 10), ParameterError);
  p.mincover = 0.2;
  p.start = 10;
  CHECK_THROWS_AS(validate_params(p, 10), ParameterError);
}

TEST_CASE("variable counts for a ten document model") {
  const auto m = build_lp(table_of(10, {}, 0.5), single_cluster(10), ExtractionParams{}, {});
  CHECK(m.count(RowKind::start) == 1);
  CHECK(m.variables.size() == 10 + 45 + 1 + 1);
  std::size_t nodes = 0, edges = 0, minedge = 0, cover = 0;
  for (const auto& v : m.variables) {
    nodes += v.kind == VarKind::node;
    edges += v.kind == VarKind::edge;
    minedge += v.kind == VarKind::minedge;
    cover += v.kind == VarKind::cover;
  }
  CHECK(nodes == 10);
  CHECK(edges == 45);
  CHECK(minedge == 1);
  CHECK(cover == 1);
  CHECK(m.variables[m.edge_var(2, 7)].name() == "edge_2_7");
  CHECK(m.to_lp_format().find("minedge") != std::string::npos);
}

TEST_CASE("ledger entries become rows") {
  ConstraintLedger ledger;
  ledger.removed_nodes = {3};
  ledger.user_clusters[0] = {2, 5, 8};
  const auto m = build_lp(table_of(10, {}, 0.5), single_cluster(10), ExtractionParams{}, ledger);
  REQUIRE(has_row(m, RowKind::removed_node, "removed_node_3"));
  const auto removed = m.rows_of(RowKind::removed_node).front();
  CHECK(removed->lower == 0.0);
  CHECK(removed->upper == 0.0);
  CHECK(removed->terms.size() == 1);
  CHECK(removed->terms.front().first == m.node_var(3));

  const auto nodes = m.rows_of(RowKind::cluster_node);
  const auto sums = m.rows_of(RowKind::cluster_edge_sum);
  REQUIRE(nodes.size() == 3);
  REQUIRE(sums.size() == 3);
  for (auto* r : nodes) CHECK(r->lower == doctest::Approx(0.01));
  for (auto* r : sums) {
    CHECK(r->lower == doctest::Approx(0.05));
    CHECK(r->terms.size() == 2);
  }
}

TEST_CASE("three document chain of perfect coherence") {
  const auto coh = table_of(3, {{{0, 1}, 1.0}, {{1, 2}, 1.0}, {{0, 2}, 0.5}});
  ExtractionParams p;
  p.K = 3;
  p.mincover = 0.0;

  // Brute force over integral maps: every node active, node 2 picks one predecessor.
  double best = -1.0;
  Edge best_pred{0, 0};
  for (std::size_t pred : {0u, 1u}) {
    const double weakest = std::min(coh.at(0, 1), coh.at(pred, 2));
    if (weakest > best) {
      best = weakest;
      best_pred = {pred, 2};
    }
  }
  REQUIRE(best_pred == Edge{1, 2});

  for (const char* name : {"direct", "column-generation", "fractional"}) {
    CAPTURE(name);
    const auto raw = solve_lp(build_lp(coh, single_cluster(3), p, {}), *make_solver(name));
    REQUIRE(raw.status == SolverStatus::optimal);
    for (double w : raw.node_weights) CHECK(w == doctest::Approx(1.0));
    CHECK(raw.edge_weight(0, 1) == doctest::Approx(1.0));
    CHECK(raw.edge_weight(1, 2) == doctest::Approx(1.0));
    CHECK(raw.edge_weight(0, 2) == doctest::Approx(0.0));
    CHECK(raw.minedge == doctest::Approx(best));
  }

  SUBCASE("removing the bridging edge leaves node 2 unreachable") {
    // Node 0 can push at most its own unit of flow, so with K = 3 node 2 needs edge (1, 2).
    ConstraintLedger ledger;
    ledger.removed_edges = {{1, 2}};
    const auto raw = solve_lp(build_lp(coh, single_cluster(3), p, ledger));
    REQUIRE(raw.status == SolverStatus::infeasible);
    CHECK(std::find(raw.diagnostics.begin(), raw.diagnostics.end(), "removed_edge_1_2") != raw.diagnostics.end());
  }
  SUBCASE("removing the shortcut changes nothing") {
    ConstraintLedger ledger;
    ledger.removed_edges = {{0, 2}};
    const auto raw = solve_lp(build_lp(coh, single_cluster(3), p, ledger));
    REQUIRE(raw.status == SolverStatus::optimal);
    CHECK(raw.edge_weights.count({0, 2}) == 0);
    CHECK(raw.edge_weight(1, 2) == doctest::Approx(1.0));
    CHECK(raw.minedge == doctest::Approx(1.0));
  }
}

TEST_CASE("unsatisfiable coverage is infeasible with diagnostics") {
  ExtractionParams p;
  p.K = 3;
  p.mincover = 1.0;
  const MembershipTensor empty(Eigen::MatrixXd::Zero(4, 0));
  const auto raw = solve_lp(build_lp(table_of(4, {}, 0.7), empty, p, {}));
  CHECK(raw.status == SolverStatus::infeasible);
  CHECK_FALSE(raw.diagnostics.empty());
}

TEST_CASE("infeasible ledgers name their constraints") {
  ExtractionParams p;
  p.K = 4;
  p.mincover = 0.0;
  ConstraintLedger ledger;
  ledger.removed_nodes = {1, 2};
  const auto raw = solve_lp(build_lp(table_of(4, {}, 0.7), single_cluster(4), p, ledger));
  REQUIRE(raw.status == SolverStatus::infeasible);
  const auto& d = raw.diagnostics;
  CHECK(std::any_of(d.begin(), d.end(), [](const std::string& s) { return s.find("removed_node_1") != std::string::npos; }));
}

TEST_CASE("ledger contradictions") {
  ConstraintLedger l;
  l.removed_nodes = {3};
  l.added_nodes = {3};
  CHECK_FALSE(l.contradictions(10).empty());
  CHECK_THROWS_AS(l.check(10), ContradictionError);
  ConstraintLedger ok;
  ok.removed_edges = {{1, 2}};
  ok.added_edges = {{2, 4}};
  CHECK(ok.contradictions(10).empty());
  CHECK(ok.constraint_count() == 2);
}

TEST_CASE("all solvers agree on random ledgers") {
  const auto corpus = fixtures::synthetic(28, 3);
  const auto pipe = pipeline(*corpus, 4);
  std::mt19937_64 rng(99);
  ExtractionParams p;
  p.start = 1;
  int solved = 0;
  for (int trial = 0; trial < 6; ++trial) {
    ConstraintLedger ledger;
    std::uniform_int_distribution<std::size_t> pick(2, 27);
    for (int k = 0; k < 2; ++k) ledger.removed_nodes.insert(pick(rng));
    for (int k = 0; k < 2; ++k) {
      auto a = pick(rng), b = pick(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (!ledger.removed_nodes.count(a) && !ledger.removed_nodes.count(b)) ledger.added_edges.insert({a, b});
    }
    const auto model = build_lp(pipe.coherence, pipe.membership, p, ledger);
    const auto direct = solve_lp(model, HighsDirectSolver{});
    const auto cg = solve_lp(model, HighsColumnGenerationSolver{});
    const auto frac = solve_lp(model, HighsFractionalSolver{});
    REQUIRE(direct.status == cg.status);
    REQUIRE(direct.status == frac.status);
    if (direct.status != SolverStatus::optimal) continue;
    ++solved;
    CHECK(cg.objective_value == doctest::Approx(direct.objective_value).epsilon(1e-7));
    CHECK(frac.objective_value == doctest::Approx(direct.objective_value).epsilon(1e-7));
    CHECK(frac.minedge == doctest::Approx(direct.minedge).epsilon(1e-7));
    CHECK(frac.edge_weight_sum() == doctest::Approx(double(p.K - 1)).epsilon(1e-6));
  }
  CHECK(solved > 0);
}
