// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "narrmap/coherence.hpp"

namespace narrmap {

using Edge = std::pair<std::size_t, std::size_t>;

struct ExtractionParams {
  std::size_t K = 6;
  double mincover = 0.2;
  double sigma_t = 30.0;
  std::optional<double> lambda;  // unset means lambda_default(n)
  std::size_t start = 0;

  double lambda_for(std::size_t n) const;
};

/// 2 / (n (n - 1)), the inverse of the number of possible edges.
double lambda_default(std::size_t n);

/// Throws ParameterError when the parameters do not fit a corpus of size n.
void validate_params(const ExtractionParams& params, std::size_t n);

struct EpsilonConfig {
  double edge_add = 0.01;
  double node_add = 0.05;
  double cluster_node = 0.01;
  double cluster_edge_sum = 0.05;
};

struct ConstraintLedger {
  std::set<std::size_t> removed_nodes;
  std::set<std::size_t> added_nodes;
  std::set<Edge> removed_edges;
  std::set<Edge> added_edges;
  std::map<int, std::set<std::size_t>> user_clusters;
  EpsilonConfig eps;

  /// Human-readable contradictions; empty when the ledger is consistent for n documents.
  std::vector<std::string> contradictions(std::size_t n) const;
  /// Throws ContradictionError on the first contradiction.
  void check(std::size_t n) const;
  std::size_t constraint_count() const;
  bool empty() const;
};

enum class VarKind { node, edge, minedge, cover };

struct LpVariable {
  VarKind kind = VarKind::node;
  std::size_t i = 0;  // node id, edge source, or cluster index
  std::size_t j = 0;  // edge target
  double lower = 0.0;
  double upper = 1.0;
  double cost = 0.0;

  std::string name() const;
};

enum class RowKind {
  min_edge,
  start,
  before_start,
  size,
  incoming,
  outgoing,
  cover_link,
  cover_average,
  removed_node,
  removed_edge,
  added_node,
  added_edge,
  cluster_node,
  cluster_edge_sum,
};

std::string_view to_string(RowKind kind) noexcept;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kNoOwner = std::numeric_limits<std::size_t>::max();

struct LpRow {
  RowKind kind = RowKind::size;
  double lower = -kInf;
  double upper = kInf;
  std::vector<std::pair<std::size_t, double>> terms;  // (variable index, coefficient)
  std::size_t owner = kNoOwner;  // edge variable whose existence the row depends on
  std::string label;
};

class LpModel {
 public:
  std::size_t n = 0;
  std::size_t clusters = 0;
  std::vector<LpVariable> variables;
  std::vector<LpRow> rows;
  double lambda = 0.0;
  std::vector<std::string> notes;  // modelling remarks, e.g. skipped singleton cluster rows

  std::size_t node_var(std::size_t i) const { return i; }
  std::size_t edge_var(std::size_t i, std::size_t j) const { return n + pair_index(n, i, j); }
  std::size_t edge_count() const { return n < 2 ? 0 : n * (n - 1) / 2; }
  std::size_t minedge_var() const { return n + edge_count(); }
  std::size_t cover_var(std::size_t k) const { return minedge_var() + 1 + k; }

  std::size_t count(RowKind kind) const;
  std::vector<const LpRow*> rows_of(RowKind kind) const;

  /// CPLEX LP text format.
  std::string to_lp_format() const;
};

LpModel build_lp(const CoherenceTable& coherence, const MembershipTensor& membership, const ExtractionParams& params,
                 const ConstraintLedger& ledger);

enum class SolverStatus { optimal, infeasible };

struct RawMap {
  std::size_t n = 0;
  std::vector<double> node_weights;
  std::map<Edge, double> edge_weights;  // only entries above 1e-7
  double objective_value = 0.0;
  double minedge = 0.0;
  SolverStatus status = SolverStatus::infeasible;
  std::vector<std::string> diagnostics;

  double edge_weight(std::size_t i, std::size_t j) const;
  double edge_weight_sum() const;
};

inline constexpr double kWeightCutoff = 1e-7;

class LpSolver {
 public:
  virtual ~LpSolver() = default;
  virtual std::string name() const = 0;
  /// Returns the optimal raw map or one with status infeasible. Never throws on infeasibility.
  virtual RawMap solve(const LpModel& model) const = 0;
};

/// Hands the full model to HiGHS.
class HighsDirectSolver final : public LpSolver {
 public:
  std::string name() const override { return "direct"; }
  RawMap solve(const LpModel& model) const override;
};

/// Solves a restricted master over a subset of edge columns and prices the rest
/// until no column has a positive reduced cost. Produces the same optimum as the
/// direct solver, far faster on corpora of a few hundred documents.
class HighsColumnGenerationSolver final : public LpSolver {
 public:
  std::size_t initial_per_node = 10;
  std::size_t batch = 2000;
  std::string name() const override { return "column-generation"; }
  RawMap solve(const LpModel& model) const override;
};

/// Substitutes y = w / t and r = 1 / t, where t = 1 - minedge, which turns every
/// min-edge row into a column bound and leaves a model with roughly 2n rows.
/// Exact whenever the flow rows fix the total edge weight; other models are
/// passed to the column generation solver.
class HighsFractionalSolver final : public LpSolver {
 public:
  std::string name() const override { return "fractional"; }
  RawMap solve(const LpModel& model) const override;
};

std::unique_ptr<LpSolver> make_solver(std::string_view name);

/// Solves with the default (fractional) solver; infeasible models get diagnostics.
RawMap solve_lp(const LpModel& model);
RawMap solve_lp(const LpModel& model, const LpSolver& solver);

}  // namespace narrmap
