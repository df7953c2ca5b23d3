// SPDX-License-Identifier: Apache-2.0
#include "narrmap/service.hpp"

#include <sstream>
#include <vector>

#include "narrmap/error.hpp"
#include "narrmap/serialize.hpp"

namespace narrmap {

using nlohmann::json;

namespace {

ApiResponse error(int status, const std::string& message) { return {status, json{{"error", message}}}; }

std::vector<std::string_view> segments(std::string_view path) {
  if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < path.size()) {
    if (path[pos] == '/') {
      ++pos;
      continue;
    }
    const auto end = std::min(path.find('/', pos), path.size());
    out.push_back(path.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

std::size_t parse_index(std::string_view s) {
  std::size_t v = 0;
  if (s.empty()) throw NotFoundError("empty id");
  for (char c : s) {
    if (c < '0' || c > '9') throw NotFoundError("unknown document '" + std::string(s) + "'");
    v = v * 10 + std::size_t(c - '0');
  }
  return v;
}

SyntheticSpec synthetic_from_json(const json& j) {
  SyntheticSpec s;
  s.n = j.value("n", s.n);
  s.topics = j.value("topics", s.topics);
  s.seed = j.value("seed", s.seed);
  s.embedding_dim = j.value("embedding_dim", s.embedding_dim);
  s.time_span_days = j.value("time_span_days", s.time_span_days);
  s.noise_scale = j.value("noise_scale", s.noise_scale);
  if (j.contains("plants"))
    for (const auto& p : j.at("plants"))
      s.keyword_plants.push_back({p.at("tag").get<std::string>(), p.value("fraction", 0.1), p.value("offset", 0.5)});
  return s;
}

}  // namespace

Service::Service(std::filesystem::path data_dir, SessionConfig config)
    : data_dir_(std::move(data_dir)), config_(std::move(config)) {}

ApiResponse Service::handle(std::string_view method, std::string_view path, std::string_view body) {
  try {
    json request = json::object();
    if (body.find_first_not_of(" \t\r\n") != std::string_view::npos) request = json::parse(body);
    const auto seg = segments(path);
    if (seg.size() == 1 && seg[0] == "datasets") {
      if (method == "POST") return post_dataset(request);
      if (method == "GET") {
        std::lock_guard lock(registry_);
        json list = json::array();
        for (const auto& [id, d] : datasets_)
          list.push_back({{"dataset_id", id}, {"size", d.corpus->size()}, {"path", d.path.string()}});
        return {200, json{{"datasets", list}}};
      }
      return error(405, "method not allowed");
    }
    if (seg.size() == 1 && seg[0] == "sessions") {
      if (method == "POST") return post_session(request);
      return error(405, "method not allowed");
    }
    if (seg.size() >= 2 && seg[0] == "sessions") {
      const std::string id(seg[1]);
      const std::string_view action = seg.size() >= 3 ? seg[2] : std::string_view{};
      const std::string_view rest = seg.size() >= 4 ? seg[3] : std::string_view{};
      if (seg.size() > 4 || (seg.size() == 4 && action != "documents")) return error(404, "no such route");
      return on_session(method, id, action, rest, request);
    }
    return error(404, "no such route");
  } catch (const json::exception& e) {
    return error(400, std::string("malformed request: ") + e.what());
  } catch (const NotFoundError& e) {
    return error(404, e.what());
  } catch (const ContradictionError& e) {
    return error(409, e.what());
  } catch (const InfeasibleError& e) {
    return {422, json{{"error", e.what()}, {"diagnostics", e.diagnostics()}}};
  } catch (const SnapshotError& e) {
    return error(500, e.what());
  } catch (const Error& e) {
    return error(400, e.what());
  }
}

ApiResponse Service::post_dataset(const json& body) {
  Dataset d;
  if (body.contains("path")) {
    d.path = resolve(body.at("path").get<std::string>());
    d.corpus = std::make_shared<const Corpus>(load_corpus(d.path));
  } else if (body.contains("documents")) {
    std::ostringstream lines;
    for (const auto& doc : body.at("documents")) lines << doc.dump() << '\n';
    std::istringstream in(lines.str());
    Corpus c = parse_corpus(in, "upload");
    if (auto v = validate_corpus(c); !v.empty()) throw ValidationError(v.front());
    d.corpus = std::make_shared<const Corpus>(std::move(c));
  } else if (body.contains("synthetic")) {
    d.corpus = std::make_shared<const Corpus>(generate_synthetic_corpus(synthetic_from_json(body.at("synthetic"))));
  } else {
    throw ParameterError("dataset needs one of 'path', 'documents' or 'synthetic'");
  }

  std::string id;
  {
    std::lock_guard lock(registry_);
    id = "d" + std::to_string(next_dataset_++);
  }
  if (d.path.empty() && !data_dir_.empty()) {
    std::filesystem::create_directories(data_dir_);
    d.path = data_dir_ / (id + ".jsonl");
    save_corpus(*d.corpus, d.path);
  }
  const json out{{"dataset_id", id}, {"size", d.corpus->size()}, {"embedding_dim", d.corpus->embedding_dim}};
  std::lock_guard lock(registry_);
  datasets_.emplace(id, std::move(d));
  return {201, out};
}

ApiResponse Service::post_session(const json& body) {
  const auto dataset_id = body.at("dataset_id").get<std::string>();
  const auto dataset = find_dataset(dataset_id);
  if (!dataset) throw NotFoundError("unknown dataset '" + dataset_id + "'");
  const auto params = params_from_json(body.value("params", json::object()));
  const auto seed = body.value("seed", std::uint64_t{1});

  auto entry = std::make_shared<Entry>();
  entry->session.emplace(Session::create(dataset->corpus, params, seed, config_));
  entry->dataset_id = dataset_id;
  entry->created = entry->updated = Clock::now();
  json out = map_view(*entry->session);

  std::string id;
  {
    std::lock_guard lock(registry_);
    id = "s" + std::to_string(next_session_++);
    sessions_.emplace(id, entry);
  }
  out["session_id"] = id;
  out["dataset_id"] = dataset_id;
  return {201, out};
}

ApiResponse Service::on_session(std::string_view method, const std::string& id, std::string_view action,
                                std::string_view rest, const json& body) {
  if (action.empty() && method == "DELETE") {
    std::lock_guard lock(registry_);
    if (!sessions_.erase(id)) throw NotFoundError("unknown session '" + id + "'");
    return {200, json{{"deleted", id}}};
  }
  const auto entry = find_session(id);
  std::lock_guard lock(entry->mutex);
  entry->updated = Clock::now();
  Session& s = *entry->session;

  const bool get = method == "GET";
  const bool post = method == "POST";
  if (action == "map" && get) return {200, map_view(s)};
  if (action == "history" && get) {
    json events = json::array();
    for (const auto& e : s.history()) events.push_back(to_json(e));
    return {200, json{{"history", events}, {"basis", s.basis()}}};
  }
  if (action == "documents" && get) {
    const auto doc = parse_index(rest);
    if (doc >= s.corpus().size()) throw NotFoundError("unknown document " + std::to_string(doc));
    return {200, document_to_json(s.corpus()[doc])};
  }
  if (action == "interactions" && post) {
    const auto& stored = s.apply(event_from_json(body));
    return {200, json{{"event", to_json(stored)}, {"ledger", ledger_summary(s.ledger())},
                      {"pending", s.history().size() - s.basis()}}};
  }
  if (action == "regenerate" && post) {
    const NarrativeMap before = s.current_map();
    s.regenerate();
    json out = map_view(s);
    out["diff"] = diff_to_json(diff_maps(before, s.current_map()));
    return {200, out};
  }
  if (action == "undo" && post) {
    if (s.history().empty()) throw ContradictionError("nothing to undo");
    const auto undone = s.undo();
    return {200, json{{"undone", to_json(undone)}, {"ledger", ledger_summary(s.ledger())},
                      {"pending", s.history().size() - std::min(s.basis(), s.history().size())}}};
  }
  if (action == "snapshot" && post) {
    if (data_dir_.empty()) throw ParameterError("no data directory configured");
    const auto dataset = find_dataset(entry->dataset_id);
    if (!dataset || dataset->path.empty()) throw ParameterError("dataset has no file to reference");
    std::filesystem::create_directories(data_dir_);
    const auto file = data_dir_ / (id + ".session.json");
    save_session(s, file, dataset->path);
    return {200, json{{"snapshot", file.string()}}};
  }
  if (action == "map" || action == "history" || action == "documents" || action == "interactions" ||
      action == "regenerate" || action == "undo" || action == "snapshot")
    return error(405, "method not allowed");
  return error(404, "no such route");
}

std::shared_ptr<Service::Entry> Service::find_session(const std::string& id) const {
  std::lock_guard lock(registry_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

std::optional<Service::Dataset> Service::find_dataset(const std::string& id) const {
  std::lock_guard lock(registry_);
  auto it = datasets_.find(id);
  if (it == datasets_.end()) return std::nullopt;
  return it->second;
}

std::filesystem::path Service::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  if (path.is_relative() && !data_dir_.empty()) return data_dir_ / path;
  return path;
}

json Service::map_view(const Session& s) const {
  const auto layout = s.current_layout();
  const auto& map = s.current_map();
  json main_story = json::array();
  if (map.main_storyline < map.storylines.size()) main_story = map.storylines[map.main_storyline];
  return json{{"map", map_to_json(map, s.corpus(), layout)},
              {"layout", layout_to_json(layout)},
              {"candidates", s.candidates()},
              {"storylines", map.storylines},
              {"main_story", main_story},
              {"params", to_json(s.params())},
              {"ledger", ledger_summary(s.ledger())},
              {"pending", s.history().size() - std::min(s.basis(), s.history().size())}};
}

std::size_t Service::evict_older_than(Clock::duration age) {
  const auto cutoff = Clock::now() - age;
  std::lock_guard lock(registry_);
  std::size_t removed = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::unique_lock entry_lock(it->second->mutex, std::try_to_lock);
    if (entry_lock.owns_lock() && it->second->updated < cutoff) {
      entry_lock.unlock();
      it = sessions_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

std::size_t Service::session_count() const {
  std::lock_guard lock(registry_);
  return sessions_.size();
}

}  // namespace narrmap
