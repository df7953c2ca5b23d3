// SPDX-License-Identifier: Apache-2.0
#include "narrmap/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "narrmap/error.hpp"

namespace narrmap {

double lambda_default(std::size_t n) {
  if (n < 2) throw ParameterError("lambda_default needs n >= 2");
  return 2.0 / (double(n) * double(n - 1));
}

double ExtractionParams::lambda_for(std::size_t n) const { return lambda ? *lambda : lambda_default(n); }

void validate_params(const ExtractionParams& p, std::size_t n) {
  if (n < 2) throw ParameterError("extraction needs at least 2 documents");
  if (p.K < 2) throw ParameterError("K must be at least 2");
  if (p.K > n) throw ParameterError("K = " + std::to_string(p.K) + " exceeds the corpus size " + std::to_string(n));
  if (p.start >= n) throw ParameterError("start document " + std::to_string(p.start) + " does not exist");
  if (!(p.mincover >= 0.0 && p.mincover <= 1.0)) throw ParameterError("mincover must lie in [0,1]");
  if (!(p.sigma_t > 0.0)) throw ParameterError("sigma_t must be positive");
  if (p.lambda && !(*p.lambda >= 0.0)) throw ParameterError("lambda must be non-negative");
}

namespace {

std::string edge_name(const Edge& e) { return "(" + std::to_string(e.first) + "," + std::to_string(e.second) + ")"; }

}  // namespace

std::vector<std::string> ConstraintLedger::contradictions(std::size_t n) const {
  std::vector<std::string> out;
  auto check_id = [&](std::size_t id, const char* what) {
    if (id >= n) out.push_back(std::string(what) + " " + std::to_string(id) + " is not a document id");
  };
  for (auto i : removed_nodes) check_id(i, "removed node");
  for (auto i : added_nodes) {
    check_id(i, "added node");
    if (removed_nodes.count(i)) out.push_back("node " + std::to_string(i) + " is both added and removed");
  }
  auto check_edge = [&](const Edge& e, const char* what) {
    if (e.first >= e.second) out.push_back(std::string(what) + " " + edge_name(e) + " is not chronological");
    check_id(e.second, what);
  };
  for (const auto& e : removed_edges) check_edge(e, "removed edge");
  for (const auto& e : added_edges) {
    check_edge(e, "added edge");
    if (removed_edges.count(e)) out.push_back("edge " + edge_name(e) + " is both added and removed");
    for (auto v : {e.first, e.second})
      if (removed_nodes.count(v))
        out.push_back("added edge " + edge_name(e) + " touches removed node " + std::to_string(v));
  }
  std::map<std::size_t, int> owner;
  for (const auto& [cid, members] : user_clusters) {
    if (cid < 0) out.push_back("cluster id " + std::to_string(cid) + " is negative");
    if (members.empty()) out.push_back("cluster " + std::to_string(cid) + " is empty");
    for (auto m : members) {
      check_id(m, "cluster member");
      if (removed_nodes.count(m))
        out.push_back("cluster " + std::to_string(cid) + " contains removed node " + std::to_string(m));
      auto [it, fresh] = owner.emplace(m, cid);
      if (!fresh)
        out.push_back("node " + std::to_string(m) + " is in clusters " + std::to_string(it->second) + " and " +
                      std::to_string(cid));
    }
  }
  return out;
}

void ConstraintLedger::check(std::size_t n) const {
  if (auto c = contradictions(n); !c.empty()) throw ContradictionError(c.front());
}

std::size_t ConstraintLedger::constraint_count() const {
  std::size_t total = removed_nodes.size() + added_nodes.size() + removed_edges.size() + added_edges.size();
  for (const auto& [cid, members] : user_clusters) total += members.size() * (members.size() > 1 ? 2 : 1);
  return total;
}

bool ConstraintLedger::empty() const {
  return removed_nodes.empty() && added_nodes.empty() && removed_edges.empty() && added_edges.empty() &&
         user_clusters.empty();
}

std::string LpVariable::name() const {
  switch (kind) {
    case VarKind::node: return "node_" + std::to_string(i);
    case VarKind::edge: return "edge_" + std::to_string(i) + "_" + std::to_string(j);
    case VarKind::minedge: return "minedge";
    case VarKind::cover: return "cover_" + std::to_string(i);
  }
  return {};
}

std::string_view to_string(RowKind kind) noexcept {
  switch (kind) {
    case RowKind::min_edge: return "min_edge";
    case RowKind::start: return "start";
    case RowKind::before_start: return "before_start";
    case RowKind::size: return "size";
    case RowKind::incoming: return "incoming";
    case RowKind::outgoing: return "outgoing";
    case RowKind::cover_link: return "cover_link";
    case RowKind::cover_average: return "cover_average";
    case RowKind::removed_node: return "removed_node";
    case RowKind::removed_edge: return "removed_edge";
    case RowKind::added_node: return "added_node";
    case RowKind::added_edge: return "added_edge";
    case RowKind::cluster_node: return "cluster_node";
    case RowKind::cluster_edge_sum: return "cluster_edge_sum";
  }
  return "unknown";
}

std::size_t LpModel::count(RowKind kind) const {
  return std::size_t(std::count_if(rows.begin(), rows.end(), [&](const LpRow& r) { return r.kind == kind; }));
}

std::vector<const LpRow*> LpModel::rows_of(RowKind kind) const {
  std::vector<const LpRow*> out;
  for (const auto& r : rows)
    if (r.kind == kind) out.push_back(&r);
  return out;
}

namespace {

void append_term(std::ostringstream& os, double coef, const std::string& name, bool first) {
  if (coef < 0) {
    os << " - ";
    coef = -coef;
  } else if (!first) {
    os << " + ";
  } else {
    os << ' ';
  }
  if (coef != 1.0) os << coef << ' ';
  os << name;
}

}  // namespace

std::string LpModel::to_lp_format() const {
  std::ostringstream os;
  os.precision(17);
  os << "\\ narrative map extraction, n = " << n << "\nMaximize\n obj:";
  bool first = true;
  for (const auto& v : variables) {
    if (v.cost == 0.0) continue;
    append_term(os, v.cost, v.name(), first);
    first = false;
  }
  if (first) os << " 0 minedge";
  os << "\nSubject To\n";
  std::size_t idx = 0;
  auto emit = [&](const LpRow& r, const char* op, double rhs) {
    os << ' ' << (r.label.empty() ? "r" + std::to_string(idx) : r.label) << '_' << idx << ':';
    if (r.terms.empty()) os << " 0 " << variables[minedge_var()].name();
    bool f = true;
    for (const auto& [var, coef] : r.terms) {
      append_term(os, coef, variables[var].name(), f);
      f = false;
    }
    os << ' ' << op << ' ' << rhs << '\n';
    ++idx;
  };
  for (const auto& r : rows) {
    if (r.lower == r.upper) {
      emit(r, "=", r.lower);
      continue;
    }
    if (r.lower > -kInf) emit(r, ">=", r.lower);
    if (r.upper < kInf) emit(r, "<=", r.upper);
  }
  os << "Bounds\n";
  for (const auto& v : variables) os << ' ' << v.lower << " <= " << v.name() << " <= " << v.upper << '\n';
  os << "End\n";
  return os.str();
}

LpModel build_lp(const CoherenceTable& coherence, const MembershipTensor& membership, const ExtractionParams& params,
                 const ConstraintLedger& ledger) {
  const std::size_t n = coherence.size();
  if (membership.size() != n) throw ParameterError("build_lp: membership and coherence disagree on n");
  validate_params(params, n);
  ledger.check(n);

  LpModel m;
  m.n = n;
  m.clusters = membership.cluster_count();
  m.lambda = params.lambda_for(n);
  const std::size_t C = m.clusters;
  const std::size_t s = params.start;

  m.variables.reserve(n + m.edge_count() + 1 + C);
  for (std::size_t i = 0; i < n; ++i) m.variables.push_back({VarKind::node, i, 0, 0.0, 1.0, 0.0});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.variables.push_back({VarKind::edge, i, j, 0.0, 1.0, -m.lambda});
  m.variables.push_back({VarKind::minedge, 0, 0, 0.0, 1.0, 1.0});
  for (std::size_t k = 0; k < C; ++k) m.variables.push_back({VarKind::cover, k, 0, 0.0, 1.0, 0.0});

  const std::size_t me = m.minedge_var();
  m.rows.reserve(m.edge_count() + 4 * n + C + 2 + ledger.constraint_count());

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t e = m.edge_var(i, j);
      LpRow r{RowKind::min_edge, -kInf, 1.0, {{me, 1.0}, {e, 1.0 - coherence.at(i, j)}}, e, "minedge"};
      m.rows.push_back(std::move(r));
    }

  m.rows.push_back({RowKind::start, 1.0, 1.0, {{m.node_var(s), 1.0}}, kNoOwner, "start"});
  for (std::size_t i = 0; i < s; ++i)
    m.rows.push_back({RowKind::before_start, 0.0, 0.0, {{m.node_var(i), 1.0}}, kNoOwner, "before_start"});

  {
    LpRow r{RowKind::size, double(params.K), double(params.K), {}, kNoOwner, "size"};
    for (std::size_t i = 0; i < n; ++i) r.terms.emplace_back(m.node_var(i), 1.0);
    m.rows.push_back(std::move(r));
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (i == s) continue;
    LpRow r{RowKind::incoming, 0.0, 0.0, {}, kNoOwner, "incoming"};
    for (std::size_t j = 0; j < i; ++j) r.terms.emplace_back(m.edge_var(j, i), 1.0);
    r.terms.emplace_back(m.node_var(i), -1.0);
    m.rows.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < n; ++i) {
    LpRow r{RowKind::outgoing, -kInf, 0.0, {}, kNoOwner, "outgoing"};
    for (std::size_t j = i + 1; j < n; ++j) r.terms.emplace_back(m.edge_var(i, j), 1.0);
    r.terms.emplace_back(m.node_var(i), -1.0);
    m.rows.push_back(std::move(r));
  }

  std::vector<bool> coverable(C, false);
  for (std::size_t k = 0; k < C; ++k) {
    LpRow r{RowKind::cover_link, -kInf, 0.0, {{m.cover_var(k), 1.0}}, kNoOwner, "cover_link"};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double w = membership.at(i, j, k);
        if (w > 0.0) r.terms.emplace_back(m.edge_var(i, j), -w);
      }
    // A cluster counts toward the average only if an admissible edge can carry membership in it.
    std::size_t positive = 0;
    for (std::size_t i = s; i < n; ++i)
      if (!ledger.removed_nodes.count(i) && membership.node(i, k) > 0.0) ++positive;
    coverable[k] = positive >= 2;
    m.rows.push_back(std::move(r));
  }
  {
    LpRow r{RowKind::cover_average, params.mincover, kInf, {}, kNoOwner, "cover_average"};
    const auto active = std::size_t(std::count(coverable.begin(), coverable.end(), true));
    for (std::size_t k = 0; k < C; ++k)
      if (coverable[k]) r.terms.emplace_back(m.cover_var(k), 1.0 / double(active));
    if (active < C) m.notes.push_back(std::to_string(C - active) + " cluster(s) excluded from the coverage average");
    m.rows.push_back(std::move(r));
  }

  const auto& eps = ledger.eps;
  for (auto i : ledger.removed_nodes)
    m.rows.push_back({RowKind::removed_node, 0.0, 0.0, {{m.node_var(i), 1.0}}, kNoOwner,
                      "removed_node_" + std::to_string(i)});
  for (const auto& [i, j] : ledger.removed_edges) {
    const auto e = m.edge_var(i, j);
    m.rows.push_back({RowKind::removed_edge, 0.0, 0.0, {{e, 1.0}}, e,
                      "removed_edge_" + std::to_string(i) + "_" + std::to_string(j)});
  }
  for (auto i : ledger.added_nodes)
    m.rows.push_back({RowKind::added_node, eps.node_add, kInf, {{m.node_var(i), 1.0}}, kNoOwner,
                      "added_node_" + std::to_string(i)});
  for (const auto& [i, j] : ledger.added_edges) {
    const auto e = m.edge_var(i, j);
    m.rows.push_back({RowKind::added_edge, eps.edge_add, kInf, {{e, 1.0}}, e,
                      "added_edge_" + std::to_string(i) + "_" + std::to_string(j)});
  }
  for (const auto& [cid, members] : ledger.user_clusters) {
    const std::string tag = "cluster_" + std::to_string(cid) + "_";
    for (auto i : members)
      m.rows.push_back({RowKind::cluster_node, eps.cluster_node, kInf, {{m.node_var(i), 1.0}}, kNoOwner,
                        tag + "node_" + std::to_string(i)});
    if (members.size() < 2) {
      m.notes.push_back("cluster " + std::to_string(cid) + " has a single member; no edge-sum constraint");
      continue;
    }
    for (auto i : members) {
      LpRow r{RowKind::cluster_edge_sum, eps.cluster_edge_sum, kInf, {}, kNoOwner, tag + "edges_" + std::to_string(i)};
      for (auto j : members) {
        if (j == i) continue;
        r.terms.emplace_back(m.edge_var(std::min(i, j), std::max(i, j)), 1.0);
      }
      m.rows.push_back(std::move(r));
    }
  }
  return m;
}

}  // namespace narrmap
