// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "narrmap/coherence.hpp"
#include "narrmap/corpus.hpp"
#include "narrmap/extraction.hpp"
#include "narrmap/projection.hpp"
#include "narrmap/structure.hpp"

namespace narrmap {

enum class InteractionKind { add_node, remove_node, add_edge, remove_edge, cluster };

std::string_view to_string(InteractionKind kind) noexcept;
InteractionKind parse_interaction_kind(std::string_view s);

struct InteractionEvent {
  InteractionKind kind = InteractionKind::remove_node;
  std::size_t node = 0;              // add_node / remove_node
  Edge edge{0, 0};                   // add_edge / remove_edge
  int cluster_id = -1;               // cluster; negative asks for a fresh id
  std::set<std::size_t> members;     // cluster
  std::uint64_t sequence = 0;        // assigned on apply
  std::int64_t timestamp = 0;        // unix seconds, assigned on apply when zero

  static InteractionEvent add_node(std::size_t id);
  static InteractionEvent remove_node(std::size_t id);
  static InteractionEvent add_edge(std::size_t i, std::size_t j);
  static InteractionEvent remove_edge(std::size_t i, std::size_t j);
  static InteractionEvent cluster(int cluster_id, std::set<std::size_t> members);

  bool operator==(const InteractionEvent&) const = default;
};

/// Folds a history into the constraint ledger it induces. Throws on contradictions.
ConstraintLedger ledger_from_history(const std::vector<InteractionEvent>& history, std::size_t n,
                                     const EpsilonConfig& eps = {});

struct SessionConfig {
  ProjectionOptions projection;
  ClusterOptions clustering;
  std::size_t min_cluster_size = 0;  // 0 selects max(5, n/50)
  std::string solver = "fractional";
  EpsilonConfig eps;
};

class Session {
 public:
  /// Runs the whole pipeline once with an empty ledger. Throws InfeasibleError
  /// when the initial program has no solution.
  static Session create(std::shared_ptr<const Corpus> corpus, const ExtractionParams& params, std::uint64_t seed,
                        const SessionConfig& config = {});

  /// Records the interaction in the ledger without regenerating. Returns the stored event.
  const InteractionEvent& apply(InteractionEvent event);
  /// Rebuilds the map from the ledger; on failure the previous state is kept and
  /// InfeasibleError carries the diagnostics.
  void regenerate();
  /// Drops the most recent interaction.
  InteractionEvent undo();

  const Corpus& corpus() const { return *corpus_; }
  std::shared_ptr<const Corpus> corpus_ptr() const { return corpus_; }
  const ExtractionParams& params() const { return params_; }
  const SessionConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const ConstraintLedger& ledger() const { return ledger_; }
  const ProjectionSpace& projection() const { return projection_; }
  const ClusterModel& clusters() const { return clusters_; }
  const CoherenceTable& coherence() const { return coherence_; }
  const MembershipTensor& membership() const { return membership_; }
  const RawMap& raw_map() const { return raw_; }
  const NarrativeMap& current_map() const { return map_; }
  const std::vector<InteractionEvent>& history() const { return history_; }
  bool projection_dirty() const { return dirty_; }
  /// Number of history events reflected in the current map.
  std::size_t basis() const { return basis_; }
  std::size_t regenerations() const { return regenerations_; }

  std::vector<std::size_t> candidates() const;
  Layout current_layout() const;

 private:
  friend Session session_from_snapshot(const std::string& text, std::shared_ptr<const Corpus> corpus);
  Session() = default;
  std::shared_ptr<const Corpus> corpus_;
  ExtractionParams params_;
  SessionConfig config_;
  std::uint64_t seed_ = 0;
  ConstraintLedger ledger_;
  ProjectionSpace projection_;
  ClusterModel clusters_;
  CoherenceTable coherence_;
  MembershipTensor membership_;
  RawMap raw_;
  NarrativeMap map_;
  std::vector<InteractionEvent> history_;
  bool dirty_ = false;
  std::size_t basis_ = 0;
  std::size_t regenerations_ = 0;
  std::uint64_t next_sequence_ = 1;
};

/// Content hash (FNV-1a, 64 bit) of the corpus' canonical serialization.
std::uint64_t corpus_hash(const Corpus& corpus);

std::string session_snapshot(const Session& s, const std::filesystem::path& corpus_path);
void save_session(const Session& s, const std::filesystem::path& snapshot, const std::filesystem::path& corpus_path);
/// Loads the referenced corpus from disk unless `corpus` is given; replays the history.
Session load_session(const std::filesystem::path& snapshot, std::shared_ptr<const Corpus> corpus = nullptr);
Session session_from_snapshot(const std::string& text, std::shared_ptr<const Corpus> corpus = nullptr);

}  // namespace narrmap
