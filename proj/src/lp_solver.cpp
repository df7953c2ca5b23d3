// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstdio>
#include <cstdlib>

#include "Highs.h"
#include "narrmap/error.hpp"
#include "narrmap/extraction.hpp"

namespace narrmap {

double RawMap::edge_weight(std::size_t i, std::size_t j) const {
  auto it = edge_weights.find({i, j});
  return it == edge_weights.end() ? 0.0 : it->second;
}

double RawMap::edge_weight_sum() const {
  double s = 0.0;
  for (const auto& [e, w] : edge_weights) s += w;
  return s;
}

namespace {

double to_highs(double v) { return std::isinf(v) ? (v > 0 ? kHighsInf : -kHighsInf) : v; }

void configure(Highs& h) {
  h.setOptionValue("output_flag", false);
  h.setOptionValue("threads", 1);
  h.setOptionValue("random_seed", 0);
  h.setOptionValue("primal_feasibility_tolerance", 1e-9);
  h.setOptionValue("dual_feasibility_tolerance", 1e-9);
}

RawMap collect(const LpModel& m, const std::vector<double>& values, double objective) {
  RawMap r;
  r.n = m.n;
  r.status = SolverStatus::optimal;
  r.objective_value = objective;
  r.node_weights.resize(m.n);
  for (std::size_t i = 0; i < m.n; ++i) r.node_weights[i] = std::clamp(values[m.node_var(i)], 0.0, 1.0);
  for (std::size_t v = m.n; v < m.minedge_var(); ++v) {
    if (values[v] > kWeightCutoff) {
      const auto& var = m.variables[v];
      r.edge_weights.emplace(Edge{var.i, var.j}, std::min(values[v], 1.0));
    }
  }
  r.minedge = values[m.minedge_var()];
  return r;
}

RawMap infeasible(const LpModel& m) {
  RawMap r;
  r.n = m.n;
  r.status = SolverStatus::infeasible;
  r.node_weights.assign(m.n, 0.0);
  return r;
}

}  // namespace

RawMap HighsDirectSolver::solve(const LpModel& m) const {
  HighsLp lp;
  const auto nv = m.variables.size();
  lp.num_col_ = HighsInt(nv);
  lp.num_row_ = HighsInt(m.rows.size());
  lp.sense_ = ObjSense::kMaximize;
  for (const auto& v : m.variables) {
    lp.col_cost_.push_back(v.cost);
    lp.col_lower_.push_back(v.lower);
    lp.col_upper_.push_back(v.upper);
  }
  auto& a = lp.a_matrix_;
  a.format_ = MatrixFormat::kRowwise;
  a.num_col_ = lp.num_col_;
  a.num_row_ = lp.num_row_;
  a.start_.assign(1, 0);
  for (const auto& r : m.rows) {
    lp.row_lower_.push_back(to_highs(r.lower));
    lp.row_upper_.push_back(to_highs(r.upper));
    for (const auto& [var, coef] : r.terms) {
      a.index_.push_back(HighsInt(var));
      a.value_.push_back(coef);
    }
    a.start_.push_back(HighsInt(a.index_.size()));
  }
  Highs h;
  configure(h);
  if (h.passModel(std::move(lp)) == HighsStatus::kError) throw Error("HiGHS rejected the model");
  h.run();
  if (h.getModelStatus() != HighsModelStatus::kOptimal) return infeasible(m);
  return collect(m, h.getSolution().col_value, h.getInfo().objective_function_value);
}

namespace {

/// Per-column view of the model used by the column generation loop.
struct ColumnIndex {
  std::vector<std::size_t> shared_rows;                             // rows always present in the master
  std::vector<std::size_t> shared_pos;                              // row -> position in shared_rows
  std::vector<std::vector<std::pair<std::size_t, double>>> shared;  // column -> (shared position, coef)
  std::vector<std::vector<std::size_t>> owned;                      // column -> owned rows
};

ColumnIndex index_columns(const LpModel& m) {
  ColumnIndex ix;
  const auto nv = m.variables.size();
  ix.shared_pos.assign(m.rows.size(), kNoOwner);
  ix.shared.resize(nv);
  ix.owned.resize(nv);
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    const auto& row = m.rows[r];
    if (row.owner != kNoOwner) {
      ix.owned[row.owner].push_back(r);
      continue;
    }
    ix.shared_pos[r] = ix.shared_rows.size();
    ix.shared_rows.push_back(r);
    for (const auto& [var, coef] : row.terms) ix.shared[var].emplace_back(ix.shared_pos[r], coef);
  }
  return ix;
}

class Master {
 public:
  Master(const LpModel& m, const ColumnIndex& ix) : m_(m), ix_(ix), col_of_(m.variables.size(), -1) {
    configure(h_);
    h_.changeObjectiveSense(ObjSense::kMaximize);
    for (std::size_t v = 0; v < m.variables.size(); ++v) {
      if (m.variables[v].kind == VarKind::edge) continue;
      const auto& var = m.variables[v];
      h_.addCol(var.cost, var.lower, var.upper, 0, nullptr, nullptr);
      col_of_[v] = next_col_++;
    }
    for (auto r : ix.shared_rows) {
      const auto& row = m.rows[r];
      std::vector<HighsInt> idx;
      std::vector<double> val;
      for (const auto& [var, coef] : row.terms)
        if (m.variables[var].kind != VarKind::edge) {
          idx.push_back(col_of_[var]);
          val.push_back(coef);
        }
      h_.addRow(to_highs(row.lower), to_highs(row.upper), HighsInt(idx.size()), idx.data(), val.data());
    }
  }

  bool active(std::size_t v) const { return col_of_[v] >= 0; }

  void add(const std::vector<std::size_t>& cols) {
    if (cols.empty()) return;
    std::vector<double> cost, lo, up, val;
    std::vector<HighsInt> start, idx;
    for (auto v : cols) {
      const auto& var = m_.variables[v];
      cost.push_back(var.cost);
      lo.push_back(var.lower);
      up.push_back(var.upper);
      start.push_back(HighsInt(idx.size()));
      for (const auto& [pos, coef] : ix_.shared[v]) {
        idx.push_back(HighsInt(pos));
        val.push_back(coef);
      }
    }
    h_.addCols(HighsInt(cols.size()), cost.data(), lo.data(), up.data(), HighsInt(idx.size()), start.data(),
               idx.data(), val.data());
    for (auto v : cols) col_of_[v] = next_col_++;
    for (auto v : cols) {
      for (auto r : ix_.owned[v]) {
        const auto& row = m_.rows[r];
        std::vector<HighsInt> ri;
        std::vector<double> rv;
        for (const auto& [var, coef] : row.terms) {
          ri.push_back(col_of_[var]);
          rv.push_back(coef);
        }
        h_.addRow(to_highs(row.lower), to_highs(row.upper), HighsInt(ri.size()), ri.data(), rv.data());
      }
    }
  }

  bool run() {
    h_.run();
    return h_.getModelStatus() == HighsModelStatus::kOptimal;
  }

  /// Inactive, non-fixed columns with positive reduced cost, best first.
  std::vector<std::size_t> price(const std::vector<std::size_t>& candidates, std::size_t limit) const {
    const auto& y = h_.getSolution().row_dual;
    std::vector<std::pair<double, std::size_t>> improving;
    for (auto v : candidates) {
      if (active(v)) continue;
      double d = m_.variables[v].cost;
      for (const auto& [pos, coef] : ix_.shared[v]) d -= y[pos] * coef;
      if (d > 1e-9) improving.emplace_back(-d, v);
    }
    std::sort(improving.begin(), improving.end());
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < std::min(limit, improving.size()); ++q) out.push_back(improving[q].second);
    return out;
  }

  double objective() const { return h_.getInfo().objective_function_value; }
  int iterations() const { return int(h_.getInfo().simplex_iteration_count); }
  RawMap result() const {
    const auto& x = h_.getSolution().col_value;
    std::vector<double> values(m_.variables.size(), 0.0);
    for (std::size_t v = 0; v < values.size(); ++v)
      if (col_of_[v] >= 0) values[v] = x[std::size_t(col_of_[v])];
    return collect(m_, values, h_.getInfo().objective_function_value);
  }

 private:
  const LpModel& m_;
  const ColumnIndex& ix_;
  Highs h_;
  std::vector<HighsInt> col_of_;
  HighsInt next_col_ = 0;
};

bool fixed_zero(const LpModel& m, const ColumnIndex& ix, std::size_t v) {
  if (m.variables[v].upper <= 0.0) return true;
  for (auto r : ix.owned[v]) {
    const auto& row = m.rows[r];
    if (row.terms.size() == 1 && row.terms[0].second > 0 && row.upper <= 0.0) return true;
  }
  return false;
}

bool forced(const LpModel& m, const ColumnIndex& ix, std::size_t v) {
  for (auto r : ix.owned[v]) {
    const auto& row = m.rows[r];
    if (row.terms.size() == 1 && row.terms[0].second > 0 && row.lower > 0.0) return true;
  }
  return false;
}

/// Coefficient of the column in its min-edge row; smaller means more coherent.
double min_edge_coef(const LpModel& m, const ColumnIndex& ix, std::size_t v) {
  for (auto r : ix.owned[v]) {
    const auto& row = m.rows[r];
    if (row.kind != RowKind::min_edge) continue;
    for (const auto& [var, coef] : row.terms)
      if (var == v) return coef;
  }
  return 1.0;
}

}  // namespace

RawMap HighsColumnGenerationSolver::solve(const LpModel& m) const {
  const ColumnIndex ix = index_columns(m);
  std::vector<std::size_t> candidates;
  std::vector<std::size_t> must;
  for (std::size_t v = 0; v < m.variables.size(); ++v) {
    if (m.variables[v].kind != VarKind::edge || fixed_zero(m, ix, v)) continue;
    candidates.push_back(v);
    if (forced(m, ix, v)) must.push_back(v);
  }
  for (const auto* row : m.rows_of(RowKind::cluster_edge_sum))
    for (const auto& [var, coef] : row->terms)
      if (!fixed_zero(m, ix, var)) must.push_back(var);

  // Best-first candidate lists per source node.
  std::vector<std::vector<std::size_t>> by_source(m.n);
  for (auto v : candidates) by_source[m.variables[v].i].push_back(v);
  for (auto& list : by_source)
    std::stable_sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      return min_edge_coef(m, ix, a) < min_edge_coef(m, ix, b);
    });

  const std::size_t levels[] = {initial_per_node, initial_per_node * 4, m.n};
  for (std::size_t per_node : levels) {
    std::vector<char> chosen(m.variables.size(), 0);
    std::vector<std::size_t> initial;
    auto take = [&](std::size_t v) {
      if (!chosen[v]) {
        chosen[v] = 1;
        initial.push_back(v);
      }
    };
    for (auto v : must) take(v);
    for (std::size_t i = 0; i < m.n; ++i) {
      for (std::size_t q = 0; q < std::min(per_node, by_source[i].size()); ++q) take(by_source[i][q]);
      if (i + 1 < m.n) {
        const auto chain = m.edge_var(i, i + 1);
        if (!fixed_zero(m, ix, chain)) take(chain);
      }
    }
    std::sort(initial.begin(), initial.end());
    Master master(m, ix);
    master.add(initial);
    bool ok = master.run();
    while (ok) {
      auto entering = master.price(candidates, batch);
      if (entering.empty()) return master.result();
      std::sort(entering.begin(), entering.end());
      master.add(entering);
      ok = master.run();
    }
    if (per_node >= m.n) break;
  }
  return infeasible(m);
}

namespace {

// True when the flow rows pin the total edge weight, so the edge costs add a constant.
bool edge_total_fixed(const LpModel& m) {
  const auto start = m.rows_of(RowKind::start);
  const auto size = m.rows_of(RowKind::size);
  if (start.size() != 1 || size.size() != 1 || start.front()->terms.size() != 1) return false;
  if (start.front()->lower != 1.0 || start.front()->upper != 1.0) return false;
  if (size.front()->lower != size.front()->upper) return false;
  const auto s = start.front()->terms.front().first;
  if (s >= m.n) return false;
  const auto incoming = m.rows_of(RowKind::incoming);
  if (incoming.size() + 1 != m.n || m.rows_of(RowKind::outgoing).size() != m.n) return false;
  for (const auto* row : incoming)
    if (row->lower != 0.0 || row->upper != 0.0) return false;
  return m.rows_of(RowKind::before_start).size() == s;
}

}  // namespace

RawMap HighsFractionalSolver::solve(const LpModel& m) const {
  if (!edge_total_fixed(m)) return HighsColumnGenerationSolver{}.solve(m);
  const auto nv = m.variables.size();
  const auto me = m.minedge_var();
  // Coefficient a_e of each edge in its min-edge row: minedge + a_e w_e <= 1.
  std::vector<double> slope(nv, -1.0);
  for (const auto& row : m.rows) {
    if (row.kind != RowKind::min_edge) continue;
    if (row.upper != 1.0 || row.lower > -kInf) return HighsDirectSolver{}.solve(m);
    for (const auto& [var, coef] : row.terms)
      if (var != me) slope[var] = coef;
  }
  for (std::size_t v = 0; v < nv; ++v) {
    const auto& var = m.variables[v];
    if (var.lower != 0.0 || (var.kind == VarKind::edge && slope[v] < 0.0)) return HighsDirectSolver{}.solve(m);
  }

  // Scaled variables x' = x / t for every variable except minedge, plus r = 1 / t as the last column.
  std::vector<HighsInt> col(nv, -1);
  HighsInt next = 0;
  for (std::size_t v = 0; v < nv; ++v)
    if (v != me) col[v] = next++;
  const HighsInt r_col = next++;

  Highs h;
  configure(h);
  HighsLp lp;
  lp.num_col_ = next;
  lp.sense_ = ObjSense::kMaximize;
  lp.col_cost_.assign(std::size_t(next), 0.0);
  lp.col_cost_[std::size_t(r_col)] = 1.0;
  lp.col_lower_.assign(std::size_t(next), 0.0);
  lp.col_upper_.assign(std::size_t(next), kHighsInf);
  lp.col_lower_[std::size_t(r_col)] = 1.0;
  for (std::size_t v = 0; v < nv; ++v)
    if (v != me && m.variables[v].kind == VarKind::edge && slope[v] > 0.0)
      lp.col_upper_[std::size_t(col[v])] = 1.0 / slope[v];

  auto& a = lp.a_matrix_;
  a.format_ = MatrixFormat::kRowwise;
  a.start_.assign(1, 0);
  auto push_row = [&](const std::vector<std::pair<std::size_t, double>>& terms, double r_coef, double lo, double up) {
    for (const auto& [var, coef] : terms) {
      a.index_.push_back(col[var]);
      a.value_.push_back(coef);
    }
    if (r_coef != 0.0) {
      a.index_.push_back(r_col);
      a.value_.push_back(r_coef);
    }
    a.start_.push_back(HighsInt(a.index_.size()));
    lp.row_lower_.push_back(lo);
    lp.row_upper_.push_back(up);
  };
  for (const auto& row : m.rows) {
    if (row.kind == RowKind::min_edge) continue;
    if (row.lower == row.upper) {
      push_row(row.terms, -row.lower, 0.0, 0.0);
      continue;
    }
    if (row.lower > -kInf) push_row(row.terms, -row.lower, 0.0, kHighsInf);
    if (row.upper < kInf) push_row(row.terms, -row.upper, -kHighsInf, 0.0);
  }
  // Upper bounds of one become x' <= r; for edges only where the min-edge bound is looser.
  std::vector<std::size_t> linked;
  for (std::size_t v = 0; v < nv; ++v) {
    if (v == me || m.variables[v].upper == kInf) continue;
    if (m.variables[v].kind == VarKind::edge && slope[v] > 0.0 && slope[v] >= 1e-3) continue;
    push_row({{v, 1.0}}, -m.variables[v].upper, -kHighsInf, 0.0);
    linked.push_back(v);
  }
  lp.num_row_ = HighsInt(lp.row_lower_.size());
  a.num_col_ = lp.num_col_;
  a.num_row_ = lp.num_row_;
  h.passModel(std::move(lp));
  h.run();

  auto status = h.getModelStatus();
  // Lazily link any edge whose scaled value exceeds r.
  std::vector<char> is_linked(nv, 0);
  for (auto v : linked) is_linked[v] = 1;
  while (status == HighsModelStatus::kOptimal) {
    const auto& x = h.getSolution().col_value;
    const double r = x[std::size_t(r_col)];
    std::vector<std::size_t> violated;
    for (std::size_t v = 0; v < nv; ++v)
      if (v != me && !is_linked[v] && x[std::size_t(col[v])] > r * m.variables[v].upper * (1.0 + 1e-12)) violated.push_back(v);
    if (violated.empty()) break;
    for (auto v : violated) {
      const HighsInt idx[2] = {col[v], r_col};
      const double val[2] = {1.0, -m.variables[v].upper};
      h.addRow(-kHighsInf, 0.0, 2, idx, val);
      is_linked[v] = 1;
    }
    h.run();
    status = h.getModelStatus();
  }
  if (status == HighsModelStatus::kUnbounded || status == HighsModelStatus::kUnboundedOrInfeasible) {
    // Unbounded r means minedge = 1 may be attainable; the direct route settles it.
    return HighsDirectSolver{}.solve(m);
  }
  if (status != HighsModelStatus::kOptimal) return infeasible(m);

  const auto& x = h.getSolution().col_value;
  const double r = x[std::size_t(r_col)];
  std::vector<double> values(nv, 0.0);
  for (std::size_t v = 0; v < nv; ++v)
    if (v != me) values[v] = x[std::size_t(col[v])] / r;
  values[me] = 1.0 - 1.0 / r;
  double objective = values[me];
  for (std::size_t v = 0; v < nv; ++v)
    if (v != me) objective += m.variables[v].cost * values[v];
  return collect(m, values, objective);
}

std::unique_ptr<LpSolver> make_solver(std::string_view name) {
  if (name == "column-generation") return std::make_unique<HighsColumnGenerationSolver>();
  if (name == "direct") return std::make_unique<HighsDirectSolver>();
  if (name == "fractional" || name.empty()) return std::make_unique<HighsFractionalSolver>();
  throw ParameterError("unknown solver '" + std::string(name) + "'");
}

RawMap solve_lp(const LpModel& model) { return solve_lp(model, HighsFractionalSolver{}); }

RawMap solve_lp(const LpModel& model, const LpSolver& solver) {
  RawMap r = solver.solve(model);
  if (r.status == SolverStatus::optimal) return r;

  const auto cover = model.rows_of(RowKind::cover_average);
  if (!cover.empty() && cover.front()->lower > 0.0) {
    LpModel relaxed = model;
    for (auto& row : relaxed.rows)
      if (row.kind == RowKind::cover_average) row.lower = 0.0;
    if (solver.solve(relaxed).status == SolverStatus::optimal) {
      r.diagnostics.push_back("cover_average: minimum average coverage " + std::to_string(cover.front()->lower) +
                              " cannot be met under the other constraints");
      return r;
    }
  }
  for (const auto& row : model.rows) {
    switch (row.kind) {
      case RowKind::removed_node:
      case RowKind::removed_edge:
      case RowKind::added_node:
      case RowKind::added_edge:
      case RowKind::cluster_node:
      case RowKind::cluster_edge_sum: r.diagnostics.push_back(row.label); break;
      default: break;
    }
  }
  if (r.diagnostics.empty())
    r.diagnostics.push_back("size/start: no chronological map of the requested size exists from the start node");
  return r;
}

}  // namespace narrmap
