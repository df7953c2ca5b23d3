// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "narrmap/session.hpp"

namespace narrmap {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// JSON API over in-memory sessions. Transport-agnostic: `handle` takes a
/// method, a path and a request body and returns a status code and a document.
/// Requests against one session are serialized; different sessions proceed in parallel.
class Service {
 public:
  using Clock = std::chrono::steady_clock;

  explicit Service(std::filesystem::path data_dir = {}, SessionConfig config = {});

  ApiResponse handle(std::string_view method, std::string_view path, std::string_view body);

  /// Drops sessions untouched for longer than `age`. Returns how many were removed.
  std::size_t evict_older_than(Clock::duration age);
  std::size_t session_count() const;

 private:
  struct Dataset {
    std::shared_ptr<const Corpus> corpus;
    std::filesystem::path path;
  };
  struct Entry {
    std::mutex mutex;
    std::optional<Session> session;
    std::string dataset_id;
    Clock::time_point created, updated;
  };

  ApiResponse post_dataset(const nlohmann::json& body);
  ApiResponse post_session(const nlohmann::json& body);
  ApiResponse on_session(std::string_view method, const std::string& id, std::string_view action,
                         std::string_view rest, const nlohmann::json& body);

  std::shared_ptr<Entry> find_session(const std::string& id) const;
  std::optional<Dataset> find_dataset(const std::string& id) const;
  std::filesystem::path resolve(const std::string& p) const;
  nlohmann::json map_view(const Session& s) const;

  std::filesystem::path data_dir_;
  SessionConfig config_;
  mutable std::mutex registry_;
  std::map<std::string, Dataset> datasets_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t next_dataset_ = 1;
  std::uint64_t next_session_ = 1;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
};

/// Reads NARRMAP_BIND (`host:port`) over the given defaults.
ServerOptions server_options_from_env(ServerOptions defaults = {});

/// Serves the API over HTTP until `stop_http_server` is called from another thread.
/// `on_listening` receives the bound port once the socket is open.
void run_http_server(Service& service, const ServerOptions& options,
                     const std::function<void(int)>& on_listening = {});
void stop_http_server();

}  // namespace narrmap
