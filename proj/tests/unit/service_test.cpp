#include <doctest.h>

#include <future>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "narrmap/serialize.hpp"
#include "narrmap/service.hpp"

// After the library headers: resolv.h (pulled in by httplib) defines `_res`.
#include <httplib.h>

using namespace narrmap;
using nlohmann::json;

namespace {

ApiResponse call(Service& s, std::string_view method, std::string_view path, const json& body = json::object()) {
  return s.handle(method, path, body.dump());
}

json synthetic_body(std::size_t n = 40) { return json{{"synthetic", {{"n", n}, {"seed", 5}}}}; }

std::string open_session(Service& s, const json& params = json::object(), std::size_t n = 40) {
  const auto d = call(s, "POST", "/datasets", synthetic_body(n));
  REQUIRE(d.status == 201);
  const auto r = call(s, "POST", "/sessions", {{"dataset_id", d.body["dataset_id"]}, {"params", params}, {"seed", 2}});
  REQUIRE(r.status == 201);
  return r.body["session_id"].get<std::string>();
}

std::set<std::size_t> node_ids(const json& map) {
  std::set<std::size_t> out;
  for (const auto& n : map["nodes"]) out.insert(n["id"].get<std::size_t>());
  return out;
}

std::set<Edge> edge_ids(const json& map) {
  std::set<Edge> out;
  for (const auto& e : map["edges"]) out.insert({e["i"].get<std::size_t>(), e["j"].get<std::size_t>()});
  return out;
}

template <class T>
std::set<T> minus(const std::set<T>& a, const std::set<T>& b) {
  std::set<T> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

}  // namespace

TEST_CASE("datasets can be created three ways") {
  fixtures::TempDir dir;
  Service svc(dir.path());
  const auto synth = call(svc, "POST", "/datasets", synthetic_body(30));
  CHECK(synth.status == 201);
  CHECK(synth.body["size"] == 30);

  const auto corpus = fixtures::synthetic(25);
  save_corpus(*corpus, dir / "c.jsonl");
  const auto by_path = call(svc, "POST", "/datasets", {{"path", "c.jsonl"}});
  CHECK(by_path.status == 201);
  CHECK(by_path.body["size"] == 25);

  json docs = json::array();
  std::istringstream lines(serialize_corpus(*corpus));
  for (std::string line; std::getline(lines, line);) docs.push_back(json::parse(line));
  const auto uploaded = call(svc, "POST", "/datasets", {{"documents", docs}});
  CHECK(uploaded.status == 201);

  const auto list = call(svc, "GET", "/datasets");
  CHECK(list.status == 200);
  CHECK(list.body["datasets"].size() == 3);

  CHECK(call(svc, "POST", "/datasets", {{"path", "missing.jsonl"}}).status == 404);
  CHECK(call(svc, "POST", "/datasets", json::object()).status == 400);
  CHECK(svc.handle("POST", "/datasets", "{not json").status == 400);
}

TEST_CASE("session lifecycle") {
  Service svc;
  const auto d = call(svc, "POST", "/datasets", synthetic_body());
  const auto created = call(svc, "POST", "/sessions", {{"dataset_id", d.body["dataset_id"]}, {"params", {{"K", 5}}}});
  REQUIRE(created.status == 201);
  for (const char* key : {"session_id", "map", "layout", "candidates", "storylines", "main_story", "params", "ledger"})
    CHECK(created.body.contains(key));
  CHECK(created.body["params"]["K"] == 5);
  const auto id = created.body["session_id"].get<std::string>();
  const auto base = "/sessions/" + id;

  const auto map = call(svc, "GET", base + "/map");
  CHECK(map.status == 200);
  CHECK(map.body["map"] == created.body["map"]);

  const auto doc = call(svc, "GET", base + "/documents/3");
  CHECK(doc.status == 200);
  CHECK(doc.body["id"] == 3);
  CHECK(call(svc, "GET", base + "/documents/4000").status == 404);

  CHECK(svc.session_count() == 1);
  CHECK(call(svc, "DELETE", base).status == 200);
  CHECK(call(svc, "GET", base + "/map").status == 404);
  CHECK(svc.session_count() == 0);
}

TEST_CASE("interactions are staged until regeneration") {
  Service svc;
  const auto id = open_session(svc);
  const auto base = "/sessions/" + id;
  const auto before = call(svc, "GET", base + "/map").body;
  const auto victim = *std::next(node_ids(before["map"]).begin());

  const auto posted = call(svc, "POST", base + "/interactions", {{"kind", "remove_node"}, {"payload", {{"id", victim}}}});
  REQUIRE(posted.status == 200);
  CHECK(posted.body["pending"] == 1);
  CHECK(posted.body["ledger"]["removed_nodes"] == json::array({victim}));
  CHECK(call(svc, "GET", base + "/map").body["map"] == before["map"]);

  const auto regen = call(svc, "POST", base + "/regenerate");
  REQUIRE(regen.status == 200);
  const auto after = regen.body["map"];
  CHECK_FALSE(node_ids(after).count(victim));

  const auto& diff = regen.body["diff"];
  const auto added = minus(node_ids(after), node_ids(before["map"]));
  const auto removed = minus(node_ids(before["map"]), node_ids(after));
  CHECK(diff["nodes_added"].get<std::set<std::size_t>>() == added);
  CHECK(diff["nodes_removed"].get<std::set<std::size_t>>() == removed);
  std::set<Edge> ea, er;
  for (const auto& e : diff["edges_added"]) ea.insert({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
  for (const auto& e : diff["edges_removed"]) er.insert({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
  CHECK(ea == minus(edge_ids(after), edge_ids(before["map"])));
  CHECK(er == minus(edge_ids(before["map"]), edge_ids(after)));

  const auto again = call(svc, "POST", base + "/regenerate");
  CHECK(dump_stable(again.body["map"]) == dump_stable(after));
  CHECK(again.body["diff"]["nodes_added"].empty());
  CHECK(again.body["diff"]["edges_removed"].empty());

  const auto history = call(svc, "GET", base + "/history");
  CHECK(history.body["history"].size() == 1);
  CHECK(history.body["history"][0]["kind"] == "remove_node");
}

TEST_CASE("error statuses") {
  Service svc;
  const auto id = open_session(svc);
  const auto base = "/sessions/" + id;
  CHECK(call(svc, "GET", "/sessions/s999/map").status == 404);
  CHECK(call(svc, "GET", "/nowhere").status == 404);
  CHECK(call(svc, "POST", "/sessions", {{"dataset_id", "d42"}}).status == 404);
  CHECK(call(svc, "DELETE", base + "/map").status == 405);
  CHECK(call(svc, "POST", base + "/undo").status == 409);
  CHECK(call(svc, "POST", base + "/interactions", {{"kind", "teleport"}}).status == 400);
  CHECK(call(svc, "POST", base + "/interactions", {{"kind", "add_edge"}, {"payload", {{"i", 7}, {"j", 2}}}}).status == 400);

  CHECK(call(svc, "POST", base + "/interactions", {{"kind", "remove_node"}, {"payload", {{"id", 3}}}}).status == 200);
  const auto clash = call(svc, "POST", base + "/interactions", {{"kind", "add_node"}, {"payload", {{"id", 3}}}});
  CHECK(clash.status == 409);
  CHECK(clash.body.contains("error"));

  const auto undo = call(svc, "POST", base + "/undo");
  CHECK(undo.status == 200);
  CHECK(undo.body["undone"]["kind"] == "remove_node");
  CHECK(undo.body["ledger"]["constraint_count"] == 0);
}

TEST_CASE("infeasible regeneration reports diagnostics") {
  Service svc;
  const auto id = open_session(svc, {{"K", 6}}, 30);
  const auto base = "/sessions/" + id;
  for (int v = 1; v <= 25; ++v)
    REQUIRE(call(svc, "POST", base + "/interactions", {{"kind", "remove_node"}, {"payload", {{"id", v}}}}).status == 200);
  const auto before = call(svc, "GET", base + "/map").body["map"];
  const auto r = call(svc, "POST", base + "/regenerate");
  CHECK(r.status == 422);
  REQUIRE(r.body.contains("diagnostics"));
  CHECK_FALSE(r.body["diagnostics"].empty());
  CHECK(call(svc, "GET", base + "/map").body["map"] == before);
}

TEST_CASE("the API and a direct session produce identical map files") {
  fixtures::TempDir dir;
  const auto corpus = fixtures::synthetic(50, 9);
  save_corpus(*corpus, dir / "c.jsonl");
  Service svc(dir.path());
  const auto d = call(svc, "POST", "/datasets", {{"path", (dir / "c.jsonl").string()}});
  const json params{{"K", 6}, {"mincover", 0.2}, {"sigma_t", 30.0}};
  const auto r = call(svc, "POST", "/sessions", {{"dataset_id", d.body["dataset_id"]}, {"params", params}, {"seed", 4}});
  REQUIRE(r.status == 201);

  const auto loaded = std::make_shared<const Corpus>(load_corpus(dir / "c.jsonl"));
  const auto s = Session::create(loaded, params_from_json(params), 4);
  CHECK(dump_stable(r.body["map"]) == dump_stable(map_to_json(s.current_map(), *loaded, s.current_layout())));

  const auto snap = call(svc, "POST", "/sessions/" + r.body["session_id"].get<std::string>() + "/snapshot");
  REQUIRE(snap.status == 200);
  const auto back = load_session(snap.body["snapshot"].get<std::string>());
  CHECK(map_to_json(back.current_map(), back.corpus(), back.current_layout()) == r.body["map"]);
}

TEST_CASE("stale sessions are evicted") {
  Service svc;
  open_session(svc);
  CHECK(svc.evict_older_than(std::chrono::hours(1)) == 0);
  CHECK(svc.evict_older_than(std::chrono::seconds(-1)) == 1);
  CHECK(svc.session_count() == 0);
}

TEST_CASE("bind address from the environment") {
  ::setenv("NARRMAP_BIND", "0.0.0.0:9123", 1);
  const auto o = server_options_from_env();
  CHECK(o.host == "0.0.0.0");
  CHECK(o.port == 9123);
  ::unsetenv("NARRMAP_BIND");
  CHECK(server_options_from_env().port == 8080);
}

TEST_CASE("HTTP round trip") {
  Service svc;
  std::promise<int> bound;
  auto port_future = bound.get_future();
  std::thread server([&] { run_http_server(svc, ServerOptions{"127.0.0.1", 0}, [&](int port) { bound.set_value(port); }); });
  REQUIRE(port_future.wait_for(std::chrono::seconds(10)) == std::future_status::ready);
  const int port = port_future.get();

  httplib::Client client("127.0.0.1", port);
  auto d = client.Post("/datasets", synthetic_body(30).dump(), "application/json");
  REQUIRE(d);
  CHECK(d->status == 201);
  const auto dataset = json::parse(d->body)["dataset_id"].get<std::string>();
  auto s = client.Post("/sessions", json{{"dataset_id", dataset}}.dump(), "application/json");
  REQUIRE(s);
  CHECK(s->status == 201);
  const auto id = json::parse(s->body)["session_id"].get<std::string>();
  auto m = client.Get("/sessions/" + id + "/map");
  REQUIRE(m);
  CHECK(m->status == 200);
  CHECK(json::parse(m->body)["map"] == json::parse(s->body)["map"]);
  auto missing = client.Get("/sessions/nope/map");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  stop_http_server();
  server.join();
}
