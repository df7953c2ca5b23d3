// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "narrmap/corpus.hpp"
#include "narrmap/session.hpp"

namespace narrmap {

enum class Task { T1, T2, T3, T4, T5 };

std::string_view to_string(Task t) noexcept;
Task parse_task(std::string_view s);

/// A document label over corpus metadata. Terms are `keyword:<tag>`,
/// `source:<name>` or `leaning:<left|center|right|none>`, optionally negated
/// with a leading `!`. Terms joined with `&` form a clause; clauses are joined with `|`.
class DocPredicate {
 public:
  DocPredicate() = default;
  static DocPredicate parse(std::string_view text);

  bool operator()(const Document& doc) const;
  const std::string& text() const { return text_; }

 private:
  enum class Field { keyword, source, leaning };
  struct Term {
    Field field;
    std::string value;
    bool negated = false;
  };
  std::string text_;
  std::vector<std::vector<Term>> clauses_;
};

struct TaskSpec {
  Task task = Task::T1;
  /// T1: irrelevant documents. T4: one predicate per cluster. T5: relevant documents.
  std::vector<DocPredicate> labels;
  std::size_t max_iterations = 25;
  double target_error = 0.0;
  std::size_t samples = 10;
  /// Reads the T2 analyst as removing nodes instead of edges.
  bool t2_remove_nodes = false;
  /// Upper bound on seeds drawn while looking for valid samples.
  std::size_t max_seed_draws = 100;
};

bool is_inconsistent_edge(const Edge& e, const Corpus& corpus);
Leaning storyline_leaning(const std::vector<std::size_t>& storyline, const Corpus& corpus);
bool is_connected_in_cluster(std::size_t node, const std::set<std::size_t>& members, const NarrativeMap& map);

/// Cluster index for every document under T4/T5 labels (first matching label wins), or -1.
std::vector<int> cluster_labels(const TaskSpec& spec, const Corpus& corpus);

double error_metric(const TaskSpec& spec, const NarrativeMap& map, const Corpus& corpus);

/// Interactions chosen by the simulated analyst for the current map, in id order.
/// T4 and T5 extend the session's existing analyst clusters where one exists.
std::vector<InteractionEvent> analyst_step(const TaskSpec& spec, const Session& session);
std::vector<InteractionEvent> analyst_step(const TaskSpec& spec, const NarrativeMap& map, const Corpus& corpus,
                                           const ConstraintLedger& ledger);

struct IterationRecord {
  std::size_t iteration = 0;
  double error = 0.0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  double edge_weight_sum = 0.0;  // raw LP edge mass before post-processing
  std::size_t interactions = 0;  // applied after measuring this map
};

struct SampleResult {
  std::uint64_t seed = 0;
  std::vector<IterationRecord> iterations;
  std::optional<std::size_t> converged_at;
  bool failed = false;
  std::string failure;
  std::size_t skipped_events = 0;
};

struct AggregatePoint {
  std::size_t iteration = 0;
  double mean_error = 0.0, sd_error = 0.0;
  double mean_nodes = 0.0, mean_edges = 0.0;
};

struct SimulationResult {
  Task task = Task::T1;
  std::vector<SampleResult> samples;
  std::vector<std::uint64_t> discarded_seeds;

  /// Mean and standard deviation per iteration; finished samples carry their last record forward.
  std::vector<AggregatePoint> aggregate() const;
  std::size_t converged_within(std::size_t iterations) const;
};

struct SimulationSetup {
  ExtractionParams params;
  SessionConfig config;
  /// Start event: earliest document matching this predicate.
  DocPredicate start = DocPredicate::parse("leaning:center");
  std::uint64_t first_seed = 1;
  std::function<void(const SampleResult&)> on_sample;
  /// Called with the session after every successful (re)generation.
  std::function<void(const Session&)> on_map;
};

std::size_t find_start(const Corpus& corpus, const DocPredicate& pred);

SampleResult run_sample(const TaskSpec& spec, std::shared_ptr<const Corpus> corpus, const ExtractionParams& params,
                        std::uint64_t seed, const SessionConfig& config = {},
                        const std::function<void(const Session&)>& on_map = {});

SimulationResult simulate_task(const TaskSpec& spec, std::shared_ptr<const Corpus> corpus,
                               const SimulationSetup& setup);

struct ComplexityComparison {
  SimulationResult unregularized;
  SimulationResult regularized;
};

/// Runs the task with lambda = 0 and with the default lambda on the same seeds.
ComplexityComparison complexity_comparison(const TaskSpec& spec, std::shared_ptr<const Corpus> corpus,
                                           const SimulationSetup& setup);

/// Mean over samples of (largest edge count seen) minus (edge count at iteration 0).
double mean_edge_increase(const SimulationResult& r);

void write_samples_csv(std::ostream& out, const SimulationResult& r);
void write_aggregate_csv(std::ostream& out, const SimulationResult& r);

}  // namespace narrmap
