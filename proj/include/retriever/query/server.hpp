#pragma once

#include <functional>
#include <memory>
#include <string>
#include <thread>

#include <json.hpp>

#include "retriever/query/engine.hpp"

namespace httplib {
class Server;
}

namespace retriever::query {

struct ServerOptions {
  // How often the index and the entity-count aggregate are refreshed in
  // the background; zero disables the refresher.
  Duration refresh_interval = 30s;
  int threads = 8;
};

// REST front end of the query engine. Endpoints:
//   POST /api/v1/search   {"query", "range", "bucket", "name"?}     -> Newsline
//   POST /api/v1/hits     {"query", "range", "page"?, "page_size"?} -> {"hits", "total", "page", "page_size"}
//   POST /api/v1/export?format=csv|json  {"query", "range"}          -> streamed rows
//   GET  /api/v1/entities?prefix=   GET /api/v1/outlets   GET /api/v1/topics
//   GET  /healthz   GET /metrics
// Errors are {"code", "message"} with a 4xx/5xx status.
class ApiServer {
 public:
  using MetricsSource = std::function<nlohmann::json()>;

  ApiServer(std::shared_ptr<QueryEngine> engine, MetricsSource metrics = {}, ServerOptions options = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds (port 0 picks a free port) and serves on background threads.
  // Returns the bound port.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  void routes();
  void refresher(std::stop_token stop);

  std::shared_ptr<QueryEngine> engine_;
  MetricsSource metrics_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
  std::jthread refresh_thread_;
};

}  // namespace retriever::query
