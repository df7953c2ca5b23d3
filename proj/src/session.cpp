// SPDX-License-Identifier: Apache-2.0
#include "narrmap/session.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "narrmap/error.hpp"
#include "narrmap/serialize.hpp"

namespace narrmap {

using nlohmann::json;

std::string_view to_string(InteractionKind kind) noexcept {
  switch (kind) {
    case InteractionKind::add_node: return "add_node";
    case InteractionKind::remove_node: return "remove_node";
    case InteractionKind::add_edge: return "add_edge";
    case InteractionKind::remove_edge: return "remove_edge";
    case InteractionKind::cluster: return "cluster";
  }
  return "unknown";
}

InteractionKind parse_interaction_kind(std::string_view s) {
  for (auto k : {InteractionKind::add_node, InteractionKind::remove_node, InteractionKind::add_edge,
                 InteractionKind::remove_edge, InteractionKind::cluster})
    if (to_string(k) == s) return k;
  throw ParameterError("unknown interaction kind '" + std::string(s) + "'");
}

InteractionEvent InteractionEvent::add_node(std::size_t id) {
  InteractionEvent e;
  e.kind = InteractionKind::add_node;
  e.node = id;
  return e;
}

InteractionEvent InteractionEvent::remove_node(std::size_t id) {
  InteractionEvent e;
  e.kind = InteractionKind::remove_node;
  e.node = id;
  return e;
}

InteractionEvent InteractionEvent::add_edge(std::size_t i, std::size_t j) {
  InteractionEvent e;
  e.kind = InteractionKind::add_edge;
  e.edge = {i, j};
  return e;
}

InteractionEvent InteractionEvent::remove_edge(std::size_t i, std::size_t j) {
  InteractionEvent e;
  e.kind = InteractionKind::remove_edge;
  e.edge = {i, j};
  return e;
}

InteractionEvent InteractionEvent::cluster(int cluster_id, std::set<std::size_t> members) {
  InteractionEvent e;
  e.kind = InteractionKind::cluster;
  e.cluster_id = cluster_id;
  e.members = std::move(members);
  return e;
}

namespace {

std::string node_str(std::size_t v) { return "node " + std::to_string(v); }
std::string edge_str(const Edge& e) {
  return "edge (" + std::to_string(e.first) + "," + std::to_string(e.second) + ")";
}

const std::set<std::size_t>* cluster_holding(const ConstraintLedger& l, std::size_t v, int* id = nullptr) {
  for (const auto& [cid, members] : l.user_clusters)
    if (members.count(v)) {
      if (id) *id = cid;
      return &members;
    }
  return nullptr;
}

/// Applies the event to the ledger or throws without modifying it.
void fold(ConstraintLedger& l, InteractionEvent& e, std::size_t n, std::size_t start) {
  auto need_node = [&](std::size_t v) {
    if (v >= n) throw NotFoundError(node_str(v) + " does not exist");
  };
  auto need_edge = [&](const Edge& ed) {
    need_node(ed.first);
    need_node(ed.second);
    if (!(ed.first < ed.second)) throw ParameterError(edge_str(ed) + " must be chronological (i < j)");
  };
  switch (e.kind) {
    case InteractionKind::remove_node: {
      need_node(e.node);
      if (e.node == start) throw ContradictionError("the start node cannot be removed");
      if (l.removed_nodes.count(e.node)) throw ContradictionError(node_str(e.node) + " is already removed");
      if (l.added_nodes.count(e.node))
        throw ContradictionError(node_str(e.node) + " was added; undo the addition before removing it");
      int cid = 0;
      if (cluster_holding(l, e.node, &cid))
        throw ContradictionError(node_str(e.node) + " belongs to user cluster " + std::to_string(cid));
      for (const auto& ed : l.added_edges)
        if (ed.first == e.node || ed.second == e.node)
          throw ContradictionError(node_str(e.node) + " is an endpoint of added " + edge_str(ed));
      l.removed_nodes.insert(e.node);
      break;
    }
    case InteractionKind::add_node:
      need_node(e.node);
      if (l.removed_nodes.count(e.node))
        throw ContradictionError(node_str(e.node) + " was removed; undo the removal before adding it");
      if (l.added_nodes.count(e.node)) throw ContradictionError(node_str(e.node) + " is already added");
      l.added_nodes.insert(e.node);
      break;
    case InteractionKind::remove_edge:
      need_edge(e.edge);
      if (l.removed_edges.count(e.edge)) throw ContradictionError(edge_str(e.edge) + " is already removed");
      if (l.added_edges.count(e.edge))
        throw ContradictionError(edge_str(e.edge) + " was added; undo the addition before removing it");
      l.removed_edges.insert(e.edge);
      break;
    case InteractionKind::add_edge:
      need_edge(e.edge);
      if (l.removed_edges.count(e.edge))
        throw ContradictionError(edge_str(e.edge) + " was removed; undo the removal before adding it");
      if (l.added_edges.count(e.edge)) throw ContradictionError(edge_str(e.edge) + " is already added");
      for (auto v : {e.edge.first, e.edge.second})
        if (l.removed_nodes.count(v)) throw ContradictionError(edge_str(e.edge) + " touches removed " + node_str(v));
      l.added_edges.insert(e.edge);
      break;
    case InteractionKind::cluster: {
      if (e.members.empty()) throw ParameterError("cluster interaction without members");
      for (auto v : e.members) {
        need_node(v);
        if (l.removed_nodes.count(v)) throw ContradictionError(node_str(v) + " is removed and cannot be clustered");
        int cid = 0;
        if (cluster_holding(l, v, &cid))
          throw ContradictionError(node_str(v) + " already belongs to user cluster " + std::to_string(cid));
      }
      if (e.cluster_id < 0) {
        e.cluster_id = l.user_clusters.empty() ? 0 : l.user_clusters.rbegin()->first + 1;
      }
      l.user_clusters[e.cluster_id].insert(e.members.begin(), e.members.end());
      break;
    }
  }
}

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

struct Models {
  ProjectionSpace projection;
  ClusterModel clusters;
  CoherenceTable coherence;
  MembershipTensor membership;
};

Models learn(const Corpus& corpus, const ConstraintLedger& ledger, std::uint64_t seed, const SessionConfig& cfg,
             double sigma_t) {
  Models m;
  const auto labels = build_label_vector(corpus.size(), ledger.user_clusters);
  m.projection = project(corpus, labels, seed, cfg.projection);
  const auto mcs = cfg.min_cluster_size ? cfg.min_cluster_size : default_min_cluster_size(corpus.size());
  m.clusters = soft_cluster(m.projection, std::min(mcs, corpus.size()), seed, cfg.clustering);
  m.coherence = coherence_table(m.projection, m.clusters, corpus, sigma_t);
  m.membership = edge_membership(m.clusters);
  return m;
}

}  // namespace

ConstraintLedger ledger_from_history(const std::vector<InteractionEvent>& history, std::size_t n,
                                     const EpsilonConfig& eps) {
  ConstraintLedger l;
  l.eps = eps;
  for (auto e : history) fold(l, e, n, n);
  return l;
}

Session Session::create(std::shared_ptr<const Corpus> corpus, const ExtractionParams& params, std::uint64_t seed,
                        const SessionConfig& config) {
  if (!corpus) throw ParameterError("session needs a corpus");
  if (auto v = validate_corpus(*corpus); !v.empty()) throw ValidationError(v.front());
  validate_params(params, corpus->size());
  make_solver(config.solver);
  Session s;
  s.corpus_ = std::move(corpus);
  s.params_ = params;
  s.config_ = config;
  s.seed_ = seed;
  s.ledger_.eps = config.eps;
  s.dirty_ = true;
  s.regenerate();
  return s;
}

const InteractionEvent& Session::apply(InteractionEvent event) {
  ConstraintLedger next = ledger_;
  fold(next, event, corpus_->size(), params_.start);
  event.sequence = next_sequence_++;
  if (event.timestamp == 0) event.timestamp = now_seconds();
  ledger_ = std::move(next);
  if (event.kind == InteractionKind::cluster) dirty_ = true;
  history_.push_back(std::move(event));
  return history_.back();
}

void Session::regenerate() {
  const Corpus& corpus = *corpus_;
  std::optional<Models> relearned;
  if (dirty_) relearned = learn(corpus, ledger_, seed_, config_, params_.sigma_t);
  const CoherenceTable& coh = relearned ? relearned->coherence : coherence_;
  const MembershipTensor& mem = relearned ? relearned->membership : membership_;

  const LpModel model = build_lp(coh, mem, params_, ledger_);
  const auto solver = make_solver(config_.solver);
  RawMap raw = solve_lp(model, *solver);
  if (raw.status != SolverStatus::optimal)
    throw InfeasibleError("the extraction program is infeasible under the current constraints", raw.diagnostics);
  NarrativeMap map = postprocess(raw, params_, ledger_.added_nodes);

  if (relearned) {
    projection_ = std::move(relearned->projection);
    clusters_ = std::move(relearned->clusters);
    coherence_ = std::move(relearned->coherence);
    membership_ = std::move(relearned->membership);
  }
  raw_ = std::move(raw);
  map_ = std::move(map);
  dirty_ = false;
  basis_ = history_.size();
  ++regenerations_;
}

InteractionEvent Session::undo() {
  if (history_.empty()) throw ParameterError("nothing to undo");
  InteractionEvent last = history_.back();
  history_.pop_back();
  ConstraintLedger l;
  l.eps = config_.eps;
  for (auto e : history_) fold(l, e, corpus_->size(), params_.start);
  ledger_ = std::move(l);
  if (last.kind == InteractionKind::cluster) dirty_ = true;
  if (basis_ > history_.size()) basis_ = history_.size();
  return last;
}

std::vector<std::size_t> Session::candidates() const {
  return select_candidates(map_, coherence_, ledger_.removed_nodes, params_.K);
}

Layout Session::current_layout() const { return layout(map_, candidates(), coherence_); }

std::uint64_t corpus_hash(const Corpus& corpus) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_corpus(corpus)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string map_digest(const Session& s) {
  return hex64(fnv(dump_stable(map_to_json(s.current_map(), s.corpus(), Layout{}))));
}

json config_json(const SessionConfig& c) {
  return json{{"projection_dimensions", c.projection.dimensions},
              {"attraction", c.projection.attraction},
              {"jitter", c.projection.jitter},
              {"temperature", c.clustering.temperature},
              {"restarts", c.clustering.restarts},
              {"max_k", c.clustering.max_k},
              {"min_cluster_size", c.min_cluster_size},
              {"solver", c.solver},
              {"eps", {{"edge_add", c.eps.edge_add},
                       {"node_add", c.eps.node_add},
                       {"cluster_node", c.eps.cluster_node},
                       {"cluster_edge_sum", c.eps.cluster_edge_sum}}}};
}

SessionConfig config_from_json(const json& j) {
  SessionConfig c;
  c.projection.dimensions = j.at("projection_dimensions").get<std::size_t>();
  c.projection.attraction = j.at("attraction").get<double>();
  c.projection.jitter = j.at("jitter").get<double>();
  c.clustering.temperature = j.at("temperature").get<double>();
  c.clustering.restarts = j.at("restarts").get<std::size_t>();
  c.clustering.max_k = j.at("max_k").get<std::size_t>();
  c.min_cluster_size = j.at("min_cluster_size").get<std::size_t>();
  c.solver = j.at("solver").get<std::string>();
  const auto& e = j.at("eps");
  c.eps.edge_add = e.at("edge_add").get<double>();
  c.eps.node_add = e.at("node_add").get<double>();
  c.eps.cluster_node = e.at("cluster_node").get<double>();
  c.eps.cluster_edge_sum = e.at("cluster_edge_sum").get<double>();
  return c;
}

constexpr int kSnapshotVersion = 1;

}  // namespace

std::string session_snapshot(const Session& s, const std::filesystem::path& corpus_path) {
  json history = json::array();
  for (const auto& e : s.history()) history.push_back(to_json(e));
  json j{{"format", "narrmap-session"},
         {"version", kSnapshotVersion},
         {"corpus", {{"path", corpus_path.string()}, {"fnv1a", hex64(corpus_hash(s.corpus()))}}},
         {"params", to_json(s.params())},
         {"seed", s.seed()},
         {"config", config_json(s.config())},
         {"history", history},
         {"basis", s.basis()},
         {"projection_dirty", s.projection_dirty()},
         {"map_digest", map_digest(s)}};
  return dump_stable(j);
}

void save_session(const Session& s, const std::filesystem::path& snapshot, const std::filesystem::path& corpus_path) {
  std::ofstream out(snapshot, std::ios::binary);
  if (!out) throw Error("cannot write " + snapshot.string());
  out << session_snapshot(s, corpus_path);
}

Session session_from_snapshot(const std::string& text, std::shared_ptr<const Corpus> corpus) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SnapshotError(std::string("corrupt snapshot: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", std::string()) != "narrmap-session")
      throw SnapshotError("not a session snapshot");
    if (j.at("version").get<int>() != kSnapshotVersion)
      throw SnapshotError("unsupported snapshot version " + j.at("version").dump());
    const auto& cref = j.at("corpus");
    if (!corpus) corpus = std::make_shared<const Corpus>(load_corpus(cref.at("path").get<std::string>()));
    if (hex64(corpus_hash(*corpus)) != cref.at("fnv1a").get<std::string>())
      throw SnapshotError("corpus content does not match the snapshot's hash");
    const auto params = params_from_json(j.at("params"));
    const auto seed = j.at("seed").get<std::uint64_t>();
    const auto config = config_from_json(j.at("config"));
    std::vector<InteractionEvent> history;
    for (const auto& e : j.at("history")) history.push_back(event_from_json(e));
    const auto basis = j.at("basis").get<std::size_t>();
    if (basis > history.size()) throw SnapshotError("basis exceeds history length");

    Session s = Session::create(corpus, params, seed, config);
    for (std::size_t q = 0; q < history.size(); ++q) {
      if (q == basis && basis > 0) s.regenerate();
      s.apply(history[q]);
    }
    if (basis > 0 && basis == history.size()) s.regenerate();
    // Reproduce the recorded sequence numbers exactly.
    s.history_.clear();
    s.history_ = history;
    s.next_sequence_ = history.empty() ? 1 : history.back().sequence + 1;
    s.dirty_ = j.at("projection_dirty").get<bool>();
    if (map_digest(s) != j.at("map_digest").get<std::string>())
      throw SnapshotError("replayed map does not match the snapshot digest");
    return s;
  } catch (const SnapshotError&) {
    throw;
  } catch (const json::exception& e) {
    throw SnapshotError(std::string("corrupt snapshot: ") + e.what());
  }
}

Session load_session(const std::filesystem::path& snapshot, std::shared_ptr<const Corpus> corpus) {
  std::ifstream in(snapshot, std::ios::binary);
  if (!in) throw NotFoundError("cannot open snapshot " + snapshot.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return session_from_snapshot(ss.str(), std::move(corpus));
}

}  // namespace narrmap
