// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <mutex>

#include "narrmap/error.hpp"
#include "narrmap/service.hpp"

// After the Eigen-bearing headers: resolv.h, pulled in by httplib, defines _res.
#include <httplib.h>

namespace narrmap {

namespace {

std::mutex g_server_mutex;
httplib::Server* g_server = nullptr;

void dispatch(Service& service, const httplib::Request& req, httplib::Response& res) {
  const auto out = service.handle(req.method, req.path, req.body);
  res.status = out.status;
  res.set_content(out.body.dump(2) + "\n", "application/json");
}

}  // namespace

ServerOptions server_options_from_env(ServerOptions defaults) {
  const char* bind = std::getenv("NARRMAP_BIND");
  if (!bind || !*bind) return defaults;
  const std::string text(bind);
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) {
    defaults.host = text;
    return defaults;
  }
  if (colon > 0) defaults.host = text.substr(0, colon);
  try {
    defaults.port = std::stoi(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw ParameterError("NARRMAP_BIND port is not a number: " + text);
  }
  return defaults;
}

void run_http_server(Service& service, const ServerOptions& options, const std::function<void(int)>& on_listening) {
  httplib::Server server;
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) { dispatch(service, req, res); };
  server.Get(R"(/.*)", handler);
  server.Post(R"(/.*)", handler);
  server.Delete(R"(/.*)", handler);
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(nlohmann::json{{"error", message}}.dump(2) + "\n", "application/json");
  });

  int port = options.port;
  if (port == 0) {
    port = server.bind_to_any_port(options.host);
  } else if (!server.bind_to_port(options.host, port)) {
    port = -1;
  }
  if (port < 0) throw ParameterError("cannot bind " + options.host + ":" + std::to_string(options.port));
  {
    std::lock_guard lock(g_server_mutex);
    g_server = &server;
  }
  if (on_listening) on_listening(port);
  server.listen_after_bind();
  std::lock_guard lock(g_server_mutex);
  g_server = nullptr;
}

void stop_http_server() {
  std::lock_guard lock(g_server_mutex);
  if (g_server) g_server->stop();
}

}  // namespace narrmap
