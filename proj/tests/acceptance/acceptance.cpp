// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// when a criterion outside the known-failure list fails.
//
//   narrmap_acceptance [--cli PATH] [--only NAME]...

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "common/oracles.hpp"
#include "narrmap/coherence.hpp"
#include "narrmap/error.hpp"
#include "narrmap/extraction.hpp"
#include "narrmap/serialize.hpp"
#include "narrmap/session.hpp"
#include "narrmap/simulation.hpp"
#include "narrmap/structure.hpp"

namespace fs = std::filesystem;
using namespace narrmap;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Verdict()> run;
};

// Criteria that fail for reasons recorded in the README; they are still run and reported.
const std::set<std::string> kKnownFailures{"regularization-study"};

class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok) failed_.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s << what << " (got " << std::setprecision(10) << got << ", want " << want << ")";
    expect(std::abs(got - want) <= tol, s.str());
  }
  bool ok() const { return failed_.empty(); }
  Verdict verdict(const std::string& summary) const {
    std::ostringstream s;
    s << summary << ": " << (total_ - failed_.size()) << "/" << total_ << " checks";
    for (std::size_t k = 0; k < failed_.size() && k < 5; ++k) s << "; " << failed_[k];
    return {ok(), s.str()};
  }

 private:
  std::size_t total_ = 0;
  std::vector<std::string> failed_;
};

/// Every finished map seen by any criterion, checked against the structural oracle.
struct InvariantLog {
  std::size_t maps = 0;
  std::size_t bad = 0;
  std::vector<std::string> examples;

  void check(const NarrativeMap& map, std::size_t K, const std::string& where) {
    ++maps;
    const auto v = oracles::map_violations(map, K);
    if (v.empty()) return;
    ++bad;
    if (examples.size() < 5) examples.push_back(where + ": " + v.front());
  }
  void check(const Session& s, const std::string& where) { check(s.current_map(), s.params().K, where); }
};

InvariantLog invariants;

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

// ---------------------------------------------------------------------------

Verdict coherence_suite() {
  Checks c;
  const double exact = 1e-12;
  using V = std::vector<double>;

  const V a{0.3, -1.2, 2.0}, minus_a{-0.3, 1.2, -2.0};
  c.near(content_similarity(a, a), 1.0, exact, "content identical");
  c.near(content_similarity(a, minus_a), 0.0, exact, "content antipodal");
  c.near(content_similarity(V{1, 0, 0}, V{0, 3, 0}), 0.5, exact, "content orthogonal");

  c.near(topical_similarity(V{0.2, 0.3, 0.5}, V{0.2, 0.3, 0.5}), 1.0, exact, "topical equal");
  c.near(topical_similarity(V{1, 0}, V{0, 1}), 0.0, exact, "topical disjoint");
  const double js = 1.0 - oracles::jsd_bits({0.5, 0.5}, {1.0, 0.0});
  c.near(topical_similarity(V{0.5, 0.5}, V{1, 0}), js, exact, "topical half/point oracle");
  c.near(js, 0.6887, 1e-4, "topical half/point value");

  c.near(temporal_decay(0, 30), 1.0, exact, "decay at zero");
  c.near(temporal_decay(30, 30), std::exp(-1.0), exact, "decay one sigma");
  c.near(temporal_decay(30, 30), 0.3679, 1e-4, "decay one sigma value");
  c.near(temporal_decay(60, 30), std::exp(-2.0), exact, "decay two sigma");

  Corpus two;
  two.embedding_dim = 2;
  for (std::size_t i = 0; i < 2; ++i) {
    Document d;
    d.id = i;
    d.timestamp = 4.0;
    d.embedding = {1.0, 1.0};
    two.documents.push_back(d);
  }
  ProjectionSpace same;
  same.coords = Eigen::MatrixXd::Constant(2, 3, 0.7);
  ClusterModel shared;
  shared.cluster_count = 2;
  shared.membership.resize(2, 2);
  shared.membership << 0.4, 0.6, 0.4, 0.6;
  c.near(coherence_table(same, shared, two, 30.0).at(0, 1), 1.0, exact, "table identical pair");
  c.near(coherence_value(30, 30, 0.64, 0.25), std::exp(-1.0) * std::sqrt(0.64 * 0.25), exact, "coherence oracle");
  c.near(coherence_value(30, 30, 0.64, 0.25), 0.1472, 1e-4, "coherence value");

  Corpus three = two;
  three.documents.push_back(two.documents[0]);
  three.documents[2].id = 2;
  ProjectionSpace three_space;
  three_space.coords = Eigen::MatrixXd::Constant(3, 3, 0.7);
  ClusterModel three_clusters;
  three_clusters.membership = Eigen::MatrixXd::Ones(3, 1);
  const auto table = coherence_table(three_space, three_clusters, three, 30.0);
  c.expect(table.packed().size() == 3, "table stores only i < j");
  bool lower_rejected = false;
  try {
    (void)table.at(1, 0);
  } catch (const ParameterError&) {
    lower_rejected = true;
  }
  c.expect(lower_rejected, "table rejects i > j");

  ClusterModel m;
  m.cluster_count = 2;
  m.membership.resize(4, 2);
  m.membership << 1.0, 0.0, 1.0, 0.0, 0.6, 0.4, 0.3, 0.7;
  const auto t = edge_membership(m);
  c.near(t.at(0, 1, 0), 1.0, exact, "membership shared cluster");
  ClusterModel hard;
  hard.cluster_count = 2;
  hard.membership.resize(2, 2);
  hard.membership << 1.0, 0.0, 0.0, 1.0;
  const auto h = edge_membership(hard);
  c.near(h.at(0, 1, 0), 0.0, exact, "membership split k=0");
  c.near(h.at(0, 1, 1), 0.0, exact, "membership split k=1");
  c.near(t.at(2, 3, 0), std::min(0.6, 0.3), exact, "membership soft k=0");
  c.near(t.at(2, 3, 1), std::min(0.4, 0.7), exact, "membership soft k=1");
  return c.verdict("coherence operations");
}

// ---------------------------------------------------------------------------

ConstraintLedger random_ledger(std::mt19937_64& rng, std::size_t n, std::size_t start) {
  std::uniform_int_distribution<std::size_t> doc(0, n - 1);
  std::uniform_int_distribution<int> count(0, 3);
  auto pair = [&]() -> std::optional<Edge> {
    auto i = doc(rng), j = doc(rng);
    if (i == j) return std::nullopt;
    return Edge{std::min(i, j), std::max(i, j)};
  };
  while (true) {
    ConstraintLedger l;
    for (int k = count(rng); k > 0; --k)
      if (auto v = doc(rng); v != start) l.removed_nodes.insert(v);
    for (int k = count(rng) % 3; k > 0; --k)
      if (auto v = doc(rng); !l.removed_nodes.count(v)) l.added_nodes.insert(v);
    for (int k = count(rng) % 3; k > 0; --k)
      if (auto e = pair(); e && !l.removed_nodes.count(e->first) && !l.removed_nodes.count(e->second))
        l.added_edges.insert(*e);
    for (int k = count(rng); k > 0; --k)
      if (auto e = pair(); e && !l.added_edges.count(*e)) l.removed_edges.insert(*e);
    if (l.contradictions(n).empty() && !l.empty()) return l;
  }
}

Verdict lp_constraint_suite() {
  const std::size_t n = 60;
  const double tol = 1e-7;
  SyntheticSpec spec;
  spec.n = n;
  spec.seed = 21;
  const auto corpus = std::make_shared<const Corpus>(generate_synthetic_corpus(spec));
  ExtractionParams params;
  const auto session = Session::create(corpus, params, 1);
  std::mt19937_64 rng(4242);

  Checks c;
  std::size_t solved = 0, infeasible = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto ledger = random_ledger(rng, n, params.start);
    const auto raw = solve_lp(build_lp(session.coherence(), session.membership(), params, ledger));
    if (raw.status != SolverStatus::optimal) {
      ++infeasible;
      continue;
    }
    ++solved;
    const auto tag = "ledger " + std::to_string(trial) + " ";
    for (auto v : ledger.removed_nodes)
      c.expect(std::abs(raw.node_weights[v]) <= tol, tag + "removed node " + std::to_string(v));
    for (auto v : ledger.added_nodes)
      c.expect(raw.node_weights[v] >= 0.05 - tol, tag + "added node " + std::to_string(v));
    for (const auto& [i, j] : ledger.added_edges)
      c.expect(raw.edge_weight(i, j) >= 0.01 - tol, tag + "added edge " + std::to_string(i) + "," + std::to_string(j));
    for (const auto& [i, j] : ledger.removed_edges)
      c.expect(std::abs(raw.edge_weight(i, j)) <= tol, tag + "removed edge " + std::to_string(i) + "," + std::to_string(j));
    invariants.check(postprocess(raw, params, ledger.added_nodes), params.K, "lp " + tag);
  }
  c.expect(solved > 0, "at least one ledger solved");
  return c.verdict("50 ledgers, " + std::to_string(solved) + " solved, " + std::to_string(infeasible) + " infeasible");
}

// ---------------------------------------------------------------------------

Verdict brute_force_suite() {
  std::mt19937_64 rng(77);
  Checks c;
  int graphs = 0;
  while (graphs < 100) {
    const auto g = oracles::random_dag(rng, 8);
    if (g.edges.empty()) continue;
    ++graphs;
    const auto stories = extract_storylines(g);
    const auto tag = "dag " + std::to_string(graphs);
    c.expect(!stories.empty() && stories.front() == oracles::max_product_path(g), tag + " first storyline");
    c.expect(oracles::edge_set(transitive_reduce_storylines(g, stories)) == oracles::reduced_edges(g, stories),
             tag + " reduction");
  }
  return c.verdict("100 random DAGs");
}

// ---------------------------------------------------------------------------

std::shared_ptr<const Corpus> simulation_corpus() {
  SyntheticSpec s;
  s.n = 200;
  s.seed = 7;
  s.keyword_plants = {{"florida", 0.2, 0.5}, {"biden", 0.15, 0.5}};
  return std::make_shared<const Corpus>(generate_synthetic_corpus(s));
}

SimulationSetup simulation_setup(const std::string& tag) {
  SimulationSetup setup;
  setup.start = DocPredicate::parse("leaning:center&!keyword:florida&!keyword:biden");
  setup.on_map = [tag](const Session& s) { invariants.check(s, tag); };
  setup.on_sample = [tag](const SampleResult& r) {
    std::cerr << "  " << tag << " seed " << r.seed << ": " << r.iterations.size() << " maps"
              << (r.converged_at ? ", converged at " + std::to_string(*r.converged_at) : std::string(", not converged"))
              << (r.failed ? ", failed: " + r.failure : std::string()) << "\n";
  };
  return setup;
}

TaskSpec task(Task t, std::vector<std::string> labels) {
  TaskSpec s;
  s.task = t;
  for (const auto& l : labels) s.labels.push_back(DocPredicate::parse(l));
  return s;
}

std::vector<double> mean_errors(const SimulationResult& r) {
  std::vector<double> out;
  for (const auto& p : r.aggregate()) out.push_back(p.mean_error);
  return out;
}

std::optional<std::size_t> first_at_or_below(const std::vector<double>& series, double level) {
  for (std::size_t k = 0; k < series.size(); ++k)
    if (series[k] <= level) return k;
  return std::nullopt;
}

std::string when(const std::optional<std::size_t>& k) { return k ? std::to_string(*k) : std::string("never"); }

Verdict simulation_suite() {
  const auto corpus = simulation_corpus();
  Checks c;
  std::ostringstream summary;

  {
    const auto r = simulate_task(task(Task::T1, {"keyword:florida"}), corpus, simulation_setup("T1"));
    const auto mean = mean_errors(r);
    bool monotone = true;
    double previous = INFINITY;
    for (std::size_t k = 0; k < mean.size(); ++k) {
      const std::size_t lo = k >= 2 ? k - 2 : 0;
      double avg = 0.0;
      for (std::size_t q = lo; q <= k; ++q) avg += mean[q];
      avg /= double(k - lo + 1);
      if (avg > previous + 1e-12) monotone = false;
      previous = avg;
    }
    c.expect(r.samples.size() == 10, "T1 has 10 valid samples");
    c.expect(monotone, "T1 moving average non-increasing");
    c.expect(r.converged_within(25) >= 9, "T1 9/10 reach 0");
    summary << "T1 " << r.converged_within(25) << "/10 at 0, mean 0 at " << when(first_at_or_below(mean, 0.0));
  }
  {
    const auto r = simulate_task(task(Task::T2, {}), corpus, simulation_setup("T2"));
    const auto mean = mean_errors(r);
    const auto two_percent = first_at_or_below(mean, 0.02);
    const auto zero = first_at_or_below(mean, 0.0);
    c.expect(r.samples.size() == 10, "T2 has 10 valid samples");
    c.expect(two_percent && *two_percent <= 9, "T2 mean <= 2% by iteration 9");
    c.expect(zero && *zero <= 25, "T2 mean 0 by iteration 25");
    summary << "; T2 mean <=2% at " << when(two_percent) << ", 0 at " << when(zero);
  }
  for (Task t : {Task::T4, Task::T5}) {
    const auto labels = t == Task::T4 ? std::vector<std::string>{"keyword:florida", "keyword:biden"}
                                      : std::vector<std::string>{"keyword:florida"};
    const std::string name(to_string(t));
    const auto r = simulate_task(task(t, labels), corpus, simulation_setup(name));
    c.expect(r.samples.size() == 10, name + " has 10 valid samples");
    c.expect(r.converged_within(25) >= 8, name + " 8/10 reach 0");
    summary << "; " << name << " " << r.converged_within(25) << "/10 at 0";
  }
  return c.verdict(summary.str());
}

// ---------------------------------------------------------------------------

Verdict regularization_study() {
  const auto corpus = simulation_corpus();
  const auto cmp = complexity_comparison(task(Task::T4, {"keyword:florida", "keyword:biden"}), corpus,
                                         simulation_setup("T4/lambda"));
  const auto base_mean = mean_errors(cmp.unregularized);
  const auto reg_mean = mean_errors(cmp.regularized);
  const double base_increase = mean_edge_increase(cmp.unregularized);
  const double reg_increase = mean_edge_increase(cmp.regularized);

  double base_mass = 0.0, reg_mass = 0.0;
  for (const auto& s : cmp.unregularized.samples)
    if (!s.iterations.empty()) base_mass += s.iterations.front().edge_weight_sum;
  for (const auto& s : cmp.regularized.samples)
    if (!s.iterations.empty()) reg_mass += s.iterations.front().edge_weight_sum;

  Checks c;
  c.expect(first_at_or_below(base_mean, 0.0).has_value(), "lambda=0 converges to 0");
  c.expect(first_at_or_below(reg_mean, 0.0).has_value(), "default lambda converges to 0");
  c.expect(reg_increase < base_increase, "regularized edge increase strictly smaller");
  return c.verdict("edge increase lambda=0 " + fmt(base_increase) + ", default " + fmt(reg_increase) +
                   "; iteration-0 edge mass " + fmt(base_mass, 8) + " vs " + fmt(reg_mass, 8));
}

// ---------------------------------------------------------------------------

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string map_file(const Session& s) { return dump_stable(map_to_json(s.current_map(), s.corpus(), s.current_layout())); }

Session replay(std::shared_ptr<const Corpus> corpus, const ExtractionParams& p, std::uint64_t seed,
               const std::vector<InteractionEvent>& history) {
  auto s = Session::create(std::move(corpus), p, seed);
  for (auto e : history) s.apply(std::move(e));
  if (!history.empty()) s.regenerate();
  return s;
}

std::string cli_path;

Verdict determinism_suite() {
  SyntheticSpec spec;
  spec.n = 120;
  spec.seed = 3;
  spec.keyword_plants = {{"florida", 0.1, 0.5}};
  const auto dir = fs::temp_directory_path() / ("narrmap-acceptance-" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  save_corpus(generate_synthetic_corpus(spec), dir / "corpus.jsonl");
  const auto corpus = std::make_shared<const Corpus>(load_corpus(dir / "corpus.jsonl"));

  ExtractionParams p;
  const std::uint64_t seed = 5;
  const auto first = Session::create(corpus, p, seed);
  const auto& graph = first.current_map().graph;
  std::vector<std::size_t> later(std::next(graph.nodes.begin()), graph.nodes.end());
  const Edge cut = std::prev(graph.edges.end())->first;
  std::vector<InteractionEvent> history{InteractionEvent::remove_node(later.back()),
                                        InteractionEvent::remove_edge(cut.first, cut.second),
                                        InteractionEvent::cluster(-1, {later.at(1), later.at(3), later.at(5)})};

  Checks c;
  const auto a = replay(corpus, p, seed, history);
  const auto b = replay(corpus, p, seed, history);
  invariants.check(a, "determinism");
  const auto text = map_file(a);
  c.expect(text == map_file(b), "two in-process runs agree");
  c.expect(dump_stable(layout_to_json(a.current_layout())) == dump_stable(layout_to_json(b.current_layout())),
           "two in-process layouts agree");

  save_session(a, dir / "session.json", dir / "corpus.jsonl");
  auto restored = load_session(dir / "session.json");
  c.expect(map_file(restored) == text, "snapshot reload reproduces the map");
  restored.regenerate();
  c.expect(map_file(restored) == text, "regenerating a reloaded snapshot reproduces the map");

  std::string how = "in-process";
  if (!cli_path.empty()) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : history) events.push_back(to_json(e));
    std::ofstream(dir / "history.json") << events.dump(2);
    auto run = [&](const std::string& out) {
      const std::string cmd = "\"" + cli_path + "\" extract --corpus \"" + (dir / "corpus.jsonl").string() +
                              "\" --history \"" + (dir / "history.json").string() + "\" --seed " + std::to_string(seed) +
                              " --out \"" + (dir / out).string() + "\" > /dev/null";
      return std::system(cmd.c_str());
    };
    c.expect(run("run1.json") == 0, "first CLI run exits 0");
    c.expect(run("run2.json") == 0, "second CLI run exits 0");
    const auto one = read_file(dir / "run1.json");
    c.expect(!one.empty() && one == read_file(dir / "run2.json"), "CLI map files are byte-identical");
    c.expect(read_file(dir / "run1.json.layout.json") == read_file(dir / "run2.json.layout.json"),
             "CLI layout files are byte-identical");
    c.expect(one == text, "CLI and library produce the same map file");
    how = "in-process and CLI";
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return c.verdict(how + ", history of " + std::to_string(history.size()) + " interactions");
}

// ---------------------------------------------------------------------------

Verdict invariant_suite() {
  std::string detail = std::to_string(invariants.maps) + " maps checked, " + std::to_string(invariants.bad) + " violating";
  for (const auto& e : invariants.examples) detail += "; " + e;
  return {invariants.maps > 0 && invariants.bad == 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only;
  for (int k = 1; k < argc; ++k) {
    const std::string arg = argv[k];
    if (arg == "--cli" && k + 1 < argc) cli_path = argv[++k];
    else if (arg == "--only" && k + 1 < argc) only.insert(argv[++k]);
    else {
      std::cerr << "usage: " << argv[0] << " [--cli PATH] [--only NAME]...\n";
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {"coherence-suite", 1.0, coherence_suite},
      {"lp-hard-constraints", 120.0, lp_constraint_suite},
      {"brute-force-oracles", 30.0, brute_force_suite},
      {"simulation-convergence", 1800.0, simulation_suite},
      {"regularization-study", 2700.0, regularization_study},
      {"determinism", 600.0, determinism_suite},
      {"postprocessing-invariants", 1.0, invariant_suite},
  };

  int unexpected = 0;
  for (const auto& cr : criteria) {
    if (!only.empty() && !only.count(cr.name)) continue;
    std::cerr << "running " << cr.name << "\n";
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = cr.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = seconds <= cr.budget_seconds;
    const bool pass = v.pass && in_time;
    const bool known = kKnownFailures.count(cr.name) > 0;
    if (!pass && !known) ++unexpected;
    std::cout << (pass ? "PASS " : "FAIL ") << cr.name << " [" << std::fixed << std::setprecision(2) << seconds
              << " s, budget " << std::setprecision(0) << cr.budget_seconds << " s]" << std::defaultfloat << ": "
              << v.detail << (in_time ? "" : "; over time budget") << (!pass && known ? " (known failure)" : "")
              << std::endl;
  }
  std::cout << (unexpected == 0 ? "acceptance: no unexpected failures" : "acceptance: unexpected failures") << std::endl;
  return unexpected == 0 ? 0 : 1;
}
