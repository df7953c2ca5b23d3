// SPDX-License-Identifier: Apache-2.0
#include "narrmap/serialize.hpp"

#include "narrmap/error.hpp"

namespace narrmap {

using nlohmann::json;

json to_json(const ExtractionParams& p) {
  json j{{"K", p.K}, {"mincover", p.mincover}, {"sigma_t", p.sigma_t}, {"start", p.start}};
  j["lambda"] = p.lambda ? json(*p.lambda) : json(nullptr);
  return j;
}

ExtractionParams params_from_json(const json& j, ExtractionParams p) {
  if (!j.is_object()) throw ParameterError("params must be a JSON object");
  try {
    if (j.contains("K")) p.K = j.at("K").get<std::size_t>();
    if (j.contains("mincover")) p.mincover = j.at("mincover").get<double>();
    if (j.contains("sigma_t")) p.sigma_t = j.at("sigma_t").get<double>();
    if (j.contains("start")) p.start = j.at("start").get<std::size_t>();
    if (j.contains("lambda")) {
      if (j.at("lambda").is_null())
        p.lambda.reset();
      else
        p.lambda = j.at("lambda").get<double>();
    }
  } catch (const json::exception& e) {
    throw ParameterError(std::string("bad params: ") + e.what());
  }
  return p;
}

json to_json(const InteractionEvent& e) {
  json j{{"kind", to_string(e.kind)}, {"sequence", e.sequence}, {"timestamp", e.timestamp}};
  switch (e.kind) {
    case InteractionKind::add_node:
    case InteractionKind::remove_node: j["payload"] = {{"id", e.node}}; break;
    case InteractionKind::add_edge:
    case InteractionKind::remove_edge: j["payload"] = {{"i", e.edge.first}, {"j", e.edge.second}}; break;
    case InteractionKind::cluster: j["payload"] = {{"cluster_id", e.cluster_id}, {"members", e.members}}; break;
  }
  return j;
}

InteractionEvent event_from_json(const json& j) {
  try {
    InteractionEvent e;
    e.kind = parse_interaction_kind(j.at("kind").get<std::string>());
    const json& p = j.contains("payload") ? j.at("payload") : j;
    switch (e.kind) {
      case InteractionKind::add_node:
      case InteractionKind::remove_node: e.node = p.at("id").get<std::size_t>(); break;
      case InteractionKind::add_edge:
      case InteractionKind::remove_edge:
        e.edge = {p.at("i").get<std::size_t>(), p.at("j").get<std::size_t>()};
        break;
      case InteractionKind::cluster:
        e.cluster_id = p.value("cluster_id", -1);
        e.members = p.at("members").get<std::set<std::size_t>>();
        break;
    }
    e.sequence = j.value("sequence", std::uint64_t{0});
    e.timestamp = j.value("timestamp", std::int64_t{0});
    return e;
  } catch (const json::exception& ex) {
    throw ParameterError(std::string("bad interaction: ") + ex.what());
  }
}

namespace {

json edge_list(const std::set<Edge>& edges) {
  json a = json::array();
  for (const auto& [i, j] : edges) a.push_back({i, j});
  return a;
}

}  // namespace

json ledger_summary(const ConstraintLedger& l) {
  json clusters = json::object();
  for (const auto& [cid, members] : l.user_clusters) clusters[std::to_string(cid)] = members;
  return json{{"removed_nodes", l.removed_nodes},
              {"added_nodes", l.added_nodes},
              {"removed_edges", edge_list(l.removed_edges)},
              {"added_edges", edge_list(l.added_edges)},
              {"user_clusters", clusters},
              {"constraint_count", l.constraint_count()}};
}

json layout_to_json(const Layout& layout) {
  json nodes = json::array();
  for (const auto& [id, p] : layout.nodes)
    nodes.push_back({{"id", id}, {"x", p.x}, {"y", p.y}, {"column", p.column}, {"row", p.row}, {"candidate", p.candidate}});
  json boxes = json::array();
  for (const auto& b : layout.boxes)
    boxes.push_back({{"storyline", b.storyline}, {"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}});
  return json{{"nodes", nodes}, {"boxes", boxes}};
}

json map_to_json(const NarrativeMap& map, const Corpus& corpus, const Layout& layout) {
  json nodes = json::array();
  std::set<std::size_t> main_nodes(map.main_path.begin(), map.main_path.end());
  for (auto id : map.graph.nodes) {
    const auto& d = corpus.documents.at(id);
    json n{{"id", id},
           {"headline", d.headline},
           {"source", d.source},
           {"storyline", map.storyline_of(id)},
           {"is_main", main_nodes.count(id) > 0}};
    if (auto it = layout.nodes.find(id); it != layout.nodes.end())
      n["position"] = {{"column", it->second.column}, {"row", it->second.row}, {"x", it->second.x}, {"y", it->second.y}};
    else
      n["position"] = nullptr;
    nodes.push_back(std::move(n));
  }
  json edges = json::array();
  for (const auto& [e, w] : map.graph.edges)
    edges.push_back({{"i", e.first},
                     {"j", e.second},
                     {"weight", w},
                     {"is_main", map.is_main_edge(e)},
                     {"is_interstory", map.interstory_edges.count(e) > 0}});
  return json{{"format", "narrmap-map"},
              {"version", 1},
              {"start", map.start},
              {"objective", map.objective},
              {"minedge", map.minedge},
              {"storylines", map.storylines},
              {"main_storyline", map.main_storyline},
              {"main_path", map.main_path},
              {"nodes", nodes},
              {"edges", edges}};
}

json diff_to_json(const MapDiff& d) {
  json ea = json::array(), er = json::array();
  for (const auto& [i, j] : d.edges_added) ea.push_back({i, j});
  for (const auto& [i, j] : d.edges_removed) er.push_back({i, j});
  return json{{"nodes_added", d.nodes_added}, {"nodes_removed", d.nodes_removed}, {"edges_added", ea}, {"edges_removed", er}};
}

json document_to_json(const Document& d) {
  return json{{"id", d.id},
              {"timestamp", d.timestamp},
              {"headline", d.headline},
              {"body", d.body},
              {"source", d.source},
              {"leaning", to_string(d.leaning)},
              {"keywords", d.keywords}};
}

std::string dump_stable(const json& j) { return j.dump(2) + "\n"; }

}  // namespace narrmap
