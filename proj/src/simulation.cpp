// SPDX-License-Identifier: Apache-2.0
#include "narrmap/simulation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <ostream>

#include "narrmap/error.hpp"

namespace narrmap {

std::string_view to_string(Task t) noexcept {
  switch (t) {
    case Task::T1: return "T1";
    case Task::T2: return "T2";
    case Task::T3: return "T3";
    case Task::T4: return "T4";
    case Task::T5: return "T5";
  }
  return "?";
}

Task parse_task(std::string_view s) {
  for (Task t : {Task::T1, Task::T2, Task::T3, Task::T4, Task::T5})
    if (to_string(t) == s) return t;
  throw ParameterError("unknown task '" + std::string(s) + "'");
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

bool opposite(Leaning a, Leaning b) {
  return (a == Leaning::left && b == Leaning::right) || (a == Leaning::right && b == Leaning::left);
}

struct Adjacency {
  std::map<std::size_t, std::set<std::size_t>> pred, succ;
  explicit Adjacency(const Graph& g) {
    for (const auto& [e, w] : g.edges) {
      succ[e.first].insert(e.second);
      pred[e.second].insert(e.first);
    }
  }
  const std::set<std::size_t>& of(const std::map<std::size_t, std::set<std::size_t>>& m, std::size_t v) const {
    static const std::set<std::size_t> none;
    auto it = m.find(v);
    return it == m.end() ? none : it->second;
  }
};

bool intersects(const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i;
    else ++j;
  }
  return false;
}

bool connected(std::size_t node, const std::set<std::size_t>& members, const NarrativeMap& map, const Adjacency& adj) {
  const auto& p = adj.of(adj.pred, node);
  const auto& s = adj.of(adj.succ, node);
  const auto line = map.storyline_of(node);
  for (auto m : members) {
    if (m == node || !map.graph.nodes.count(m)) continue;
    if (p.count(m) || s.count(m)) return true;
    if (map.storyline_of(m) == line) return true;
    if (intersects(p, adj.of(adj.pred, m)) || intersects(s, adj.of(adj.succ, m))) return true;
  }
  return false;
}

}  // namespace

DocPredicate DocPredicate::parse(std::string_view text) {
  DocPredicate p;
  p.text_ = std::string(trim(text));
  if (p.text_.empty()) throw ParameterError("empty predicate");
  for (auto clause_text : split(p.text_, '|')) {
    std::vector<Term> clause;
    for (auto term_text : split(clause_text, '&')) {
      auto t = trim(term_text);
      Term term{Field::keyword, {}, false};
      if (!t.empty() && t.front() == '!') {
        term.negated = true;
        t = trim(t.substr(1));
      }
      const auto colon = t.find(':');
      if (colon == std::string_view::npos) throw ParameterError("predicate term '" + std::string(t) + "' lacks a field");
      const auto field = lower(trim(t.substr(0, colon)));
      term.value = std::string(trim(t.substr(colon + 1)));
      if (term.value.empty()) throw ParameterError("predicate term '" + std::string(t) + "' has no value");
      if (field == "keyword") term.field = Field::keyword;
      else if (field == "source") term.field = Field::source;
      else if (field == "leaning") {
        term.field = Field::leaning;
        term.value = std::string(to_string(parse_leaning(lower(term.value))));
      } else throw ParameterError("unknown predicate field '" + field + "'");
      clause.push_back(std::move(term));
    }
    p.clauses_.push_back(std::move(clause));
  }
  return p;
}

bool DocPredicate::operator()(const Document& doc) const {
  return std::any_of(clauses_.begin(), clauses_.end(), [&](const std::vector<Term>& clause) {
    return std::all_of(clause.begin(), clause.end(), [&](const Term& t) {
      bool hit = false;
      switch (t.field) {
        case Field::keyword: hit = has_keyword(doc, t.value); break;
        case Field::source: hit = lower(doc.source) == lower(t.value); break;
        case Field::leaning: hit = to_string(doc.leaning) == t.value; break;
      }
      return hit != t.negated;
    });
  });
}

bool is_inconsistent_edge(const Edge& e, const Corpus& corpus) {
  return opposite(corpus[e.first].leaning, corpus[e.second].leaning);
}

Leaning storyline_leaning(const std::vector<std::size_t>& storyline, const Corpus& corpus) {
  std::size_t left = 0, right = 0;
  Leaning first = Leaning::none;
  for (auto id : storyline) {
    const auto l = corpus[id].leaning;
    if (l != Leaning::left && l != Leaning::right) continue;
    if (first == Leaning::none) first = l;
    (l == Leaning::left ? left : right)++;
  }
  if (left > right) return Leaning::left;
  if (right > left) return Leaning::right;
  return first;
}

bool is_connected_in_cluster(std::size_t node, const std::set<std::size_t>& members, const NarrativeMap& map) {
  return connected(node, members, map, Adjacency(map.graph));
}

std::vector<int> cluster_labels(const TaskSpec& spec, const Corpus& corpus) {
  std::vector<int> out(corpus.size(), -1);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (std::size_t c = 0; c < spec.labels.size(); ++c)
      if (spec.labels[c](corpus[i])) {
        out[i] = int(c);
        break;
      }
  return out;
}

namespace {

bool matches_any(const TaskSpec& spec, const Document& doc) {
  return std::any_of(spec.labels.begin(), spec.labels.end(), [&](const DocPredicate& p) { return p(doc); });
}

std::vector<std::size_t> inconsistent_storyline_nodes(const Storyline& line, const Corpus& corpus) {
  std::vector<std::size_t> out;
  const auto lean = storyline_leaning(line, corpus);
  if (lean == Leaning::none) return out;
  for (auto id : line)
    if (opposite(lean, corpus[id].leaning)) out.push_back(id);
  return out;
}

/// Relevant documents on the map grouped by cluster label.
std::vector<std::set<std::size_t>> relevant_on_map(const TaskSpec& spec, const NarrativeMap& map,
                                                   const Corpus& corpus) {
  const auto labels = cluster_labels(spec, corpus);
  std::vector<std::set<std::size_t>> groups(spec.labels.size());
  for (auto v : map.graph.nodes)
    if (labels[v] >= 0) groups[std::size_t(labels[v])].insert(v);
  return groups;
}

}  // namespace

double error_metric(const TaskSpec& spec, const NarrativeMap& map, const Corpus& corpus) {
  const auto& nodes = map.graph.nodes;
  switch (spec.task) {
    case Task::T1: {
      if (nodes.empty()) return 0.0;
      const auto bad = std::count_if(nodes.begin(), nodes.end(), [&](std::size_t v) { return matches_any(spec, corpus[v]); });
      return double(bad) / double(nodes.size());
    }
    case Task::T2: {
      if (map.graph.edges.empty()) return 0.0;
      std::size_t bad = 0;
      for (const auto& [e, w] : map.graph.edges) bad += is_inconsistent_edge(e, corpus);
      return double(bad) / double(map.graph.edges.size());
    }
    case Task::T3: {
      if (nodes.empty()) return 0.0;
      std::size_t bad = 0;
      for (const auto& line : map.storylines) bad += inconsistent_storyline_nodes(line, corpus).size();
      return double(bad) / double(nodes.size());
    }
    case Task::T4:
    case Task::T5: {
      const Adjacency adj(map.graph);
      std::size_t total = 0, loose = 0;
      for (const auto& group : relevant_on_map(spec, map, corpus))
        for (auto v : group) {
          ++total;
          loose += !connected(v, group, map, adj);
        }
      return total == 0 ? 1.0 : double(loose) / double(total);
    }
  }
  return 0.0;
}

namespace {

void cluster_events(const TaskSpec& spec, const NarrativeMap& map, const Corpus& corpus,
                    const ConstraintLedger& ledger, std::vector<InteractionEvent>& out) {
  const auto labels = cluster_labels(spec, corpus);
  std::set<std::size_t> clustered;
  for (const auto& [id, members] : ledger.user_clusters) clustered.insert(members.begin(), members.end());
  const auto groups = relevant_on_map(spec, map, corpus);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    std::set<std::size_t> fresh;
    for (auto v : groups[c])
      if (!clustered.count(v)) fresh.insert(v);
    if (fresh.empty()) continue;
    int existing = -1;
    for (const auto& [id, members] : ledger.user_clusters)
      if (!members.empty() && labels[*members.begin()] == int(c)) {
        existing = id;
        break;
      }
    out.push_back(InteractionEvent::cluster(existing, std::move(fresh)));
  }
}

}  // namespace

std::vector<InteractionEvent> analyst_step(const TaskSpec& spec, const Session& session) {
  return analyst_step(spec, session.current_map(), session.corpus(), session.ledger());
}

std::vector<InteractionEvent> analyst_step(const TaskSpec& spec, const NarrativeMap& map, const Corpus& corpus,
                                           const ConstraintLedger& ledger) {
  std::vector<InteractionEvent> out;
  switch (spec.task) {
    case Task::T1:
      for (auto v : map.graph.nodes)
        if (matches_any(spec, corpus[v])) out.push_back(InteractionEvent::remove_node(v));
      break;
    case Task::T2:
      if (spec.t2_remove_nodes) {
        std::set<std::size_t> targets;
        for (const auto& [e, w] : map.graph.edges)
          if (is_inconsistent_edge(e, corpus)) targets.insert(e.second == map.start ? e.first : e.second);
        for (auto v : targets) out.push_back(InteractionEvent::remove_node(v));
      } else {
        for (const auto& [e, w] : map.graph.edges)
          if (is_inconsistent_edge(e, corpus)) out.push_back(InteractionEvent::remove_edge(e.first, e.second));
      }
      break;
    case Task::T3: {
      std::set<Edge> removals, additions;
      for (const auto& line : map.storylines) {
        const auto bad_list = inconsistent_storyline_nodes(line, corpus);
        if (bad_list.empty()) continue;
        const std::set<std::size_t> bad(bad_list.begin(), bad_list.end());
        for (std::size_t p = 0; p + 1 < line.size(); ++p)
          if ((bad.count(line[p]) || bad.count(line[p + 1])) && map.graph.edges.count({line[p], line[p + 1]}))
            removals.insert({line[p], line[p + 1]});
        // Bridge each run of inconsistent nodes between its consistent neighbours.
        std::optional<std::size_t> last_good;
        bool gap = false;
        for (auto v : line) {
          if (bad.count(v)) {
            gap = true;
            continue;
          }
          if (gap && last_good) additions.insert({*last_good, v});
          last_good = v;
          gap = false;
        }
      }
      for (const auto& e : removals) out.push_back(InteractionEvent::remove_edge(e.first, e.second));
      for (const auto& e : additions)
        if (!map.graph.edges.count(e)) out.push_back(InteractionEvent::add_edge(e.first, e.second));
      break;
    }
    case Task::T4:
      cluster_events(spec, map, corpus, ledger, out);
      break;
    case Task::T5: {
      cluster_events(spec, map, corpus, ledger, out);
      std::vector<std::size_t> missing;
      for (std::size_t i = map.start + 1; i < corpus.size(); ++i)
        if (matches_any(spec, corpus[i]) && !map.graph.nodes.count(i) && !ledger.removed_nodes.count(i) &&
            !ledger.added_nodes.count(i))
          missing.push_back(i);
      const auto take = (missing.size() + 9) / 10;
      for (std::size_t k = 0; k < take; ++k) out.push_back(InteractionEvent::add_node(missing[k]));
      break;
    }
  }
  return out;
}

std::size_t find_start(const Corpus& corpus, const DocPredicate& pred) {
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (pred(corpus[i])) return i;
  throw NotFoundError("no document matches start predicate '" + pred.text() + "'");
}

namespace {

IterationRecord measure(const TaskSpec& spec, const Session& s, std::size_t iteration) {
  IterationRecord r;
  r.iteration = iteration;
  r.error = error_metric(spec, s.current_map(), s.corpus());
  r.nodes = s.current_map().graph.nodes.size();
  r.edges = s.current_map().graph.edges.size();
  r.edge_weight_sum = s.raw_map().edge_weight_sum();
  return r;
}

}  // namespace

SampleResult run_sample(const TaskSpec& spec, std::shared_ptr<const Corpus> corpus, const ExtractionParams& params,
                        std::uint64_t seed, const SessionConfig& config,
                        const std::function<void(const Session&)>& on_map) {
  SampleResult out;
  out.seed = seed;
  std::optional<Session> session;
  try {
    session.emplace(Session::create(std::move(corpus), params, seed, config));
  } catch (const InfeasibleError& e) {
    out.failed = true;
    out.failure = e.what();
    return out;
  }
  if (on_map) on_map(*session);
  out.iterations.push_back(measure(spec, *session, 0));
  for (std::size_t it = 1;; ++it) {
    if (out.iterations.back().error <= spec.target_error) {
      out.converged_at = it - 1;
      break;
    }
    if (it > spec.max_iterations) break;
    std::size_t applied = 0;
    for (auto& ev : analyst_step(spec, *session)) {
      try {
        session->apply(std::move(ev));
        ++applied;
      } catch (const ContradictionError&) {
        ++out.skipped_events;
      } catch (const ParameterError&) {
        ++out.skipped_events;
      }
    }
    out.iterations.back().interactions = applied;
    if (applied == 0) break;
    try {
      session->regenerate();
    } catch (const InfeasibleError& e) {
      out.failed = true;
      out.failure = e.what();
      break;
    }
    if (on_map) on_map(*session);
    out.iterations.push_back(measure(spec, *session, it));
  }
  return out;
}

SimulationResult simulate_task(const TaskSpec& spec, std::shared_ptr<const Corpus> corpus,
                               const SimulationSetup& setup) {
  SimulationResult result;
  result.task = spec.task;
  auto params = setup.params;
  params.start = find_start(*corpus, setup.start);
  for (std::size_t draw = 0; draw < spec.max_seed_draws && result.samples.size() < spec.samples; ++draw) {
    const auto seed = setup.first_seed + draw;
    auto sample = run_sample(spec, corpus, params, seed, setup.config, setup.on_map);
    if (!sample.iterations.empty() && sample.iterations.front().error <= spec.target_error) {
      result.discarded_seeds.push_back(seed);
      continue;
    }
    if (setup.on_sample) setup.on_sample(sample);
    result.samples.push_back(std::move(sample));
  }
  return result;
}

ComplexityComparison complexity_comparison(const TaskSpec& spec, std::shared_ptr<const Corpus> corpus,
                                           const SimulationSetup& setup) {
  ComplexityComparison out;
  auto base = setup;
  base.params.lambda = 0.0;
  out.unregularized = simulate_task(spec, corpus, base);

  auto params = setup.params;
  params.lambda.reset();
  params.start = find_start(*corpus, setup.start);
  out.regularized.task = spec.task;
  out.regularized.discarded_seeds = out.unregularized.discarded_seeds;
  for (const auto& s : out.unregularized.samples) {
    auto sample = run_sample(spec, corpus, params, s.seed, setup.config, setup.on_map);
    if (setup.on_sample) setup.on_sample(sample);
    out.regularized.samples.push_back(std::move(sample));
  }
  return out;
}

std::vector<AggregatePoint> SimulationResult::aggregate() const {
  std::size_t length = 0;
  for (const auto& s : samples) length = std::max(length, s.iterations.size());
  std::vector<AggregatePoint> out;
  for (std::size_t it = 0; it < length; ++it) {
    AggregatePoint p;
    p.iteration = it;
    std::vector<double> errors;
    for (const auto& s : samples) {
      if (s.iterations.empty()) continue;
      const auto& r = s.iterations[std::min(it, s.iterations.size() - 1)];
      errors.push_back(r.error);
      p.mean_nodes += double(r.nodes);
      p.mean_edges += double(r.edges);
    }
    if (errors.empty()) continue;
    const double k = double(errors.size());
    for (double e : errors) p.mean_error += e;
    p.mean_error /= k;
    p.mean_nodes /= k;
    p.mean_edges /= k;
    if (errors.size() > 1) {
      double ss = 0.0;
      for (double e : errors) ss += (e - p.mean_error) * (e - p.mean_error);
      p.sd_error = std::sqrt(ss / (k - 1.0));
    }
    out.push_back(p);
  }
  return out;
}

std::size_t SimulationResult::converged_within(std::size_t iterations) const {
  return std::size_t(std::count_if(samples.begin(), samples.end(), [&](const SampleResult& s) {
    return s.converged_at && *s.converged_at <= iterations;
  }));
}

double mean_edge_increase(const SimulationResult& r) {
  double total = 0.0;
  std::size_t k = 0;
  for (const auto& s : r.samples) {
    if (s.iterations.empty()) continue;
    std::size_t peak = 0;
    for (const auto& it : s.iterations) peak = std::max(peak, it.edges);
    total += double(peak) - double(s.iterations.front().edges);
    ++k;
  }
  return k == 0 ? 0.0 : total / double(k);
}

void write_samples_csv(std::ostream& out, const SimulationResult& r) {
  out << "task,sample,seed,iteration,error,nodes,edges,edge_weight_sum,interactions\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i)
    for (const auto& it : r.samples[i].iterations)
      out << to_string(r.task) << ',' << i << ',' << r.samples[i].seed << ',' << it.iteration << ',' << it.error
          << ',' << it.nodes << ',' << it.edges << ',' << it.edge_weight_sum << ',' << it.interactions << '\n';
}

void write_aggregate_csv(std::ostream& out, const SimulationResult& r) {
  out << "task,iteration,mean_error,sd_error,mean_nodes,mean_edges\n";
  for (const auto& p : r.aggregate())
    out << to_string(r.task) << ',' << p.iteration << ',' << p.mean_error << ',' << p.sd_error << ',' << p.mean_nodes
        << ',' << p.mean_edges << '\n';
}

}  // namespace narrmap
