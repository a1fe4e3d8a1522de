#include "retriever/query/server.hpp"

#include <httplib.h>

#include <condition_variable>

#include "retriever/analyzers/topics.hpp"
#include "retriever/nel/kb.hpp"

namespace retriever::query {
namespace {

using nlohmann::json;

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, {{"code", code}, {"message", message}}, status);
}

json parse_body(const httplib::Request& req) {
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw QueryError("invalid_json", "request body must be a JSON object");
  return j;
}

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw QueryError("invalid_request", std::string("bad \"") + key + "\"");
  }
}

const json& required(const json& j, const char* key) {
  if (!j.contains(key)) throw QueryError("invalid_request", std::string("missing \"") + key + "\"");
  return j[key];
}

// Maps library exceptions to error responses.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const QueryError& e) {
      send_error(res, 400, e.code(), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

ApiServer::ApiServer(std::shared_ptr<QueryEngine> engine, MetricsSource metrics, ServerOptions options)
    : engine_(std::move(engine)), metrics_(std::move(metrics)), options_(options),
      server_(std::make_unique<httplib::Server>()) {
  routes();
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::routes() {
  auto& s = *server_;
  const int threads = options_.threads;
  s.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status, res.status == 404 ? "not_found" : "http_error", "status " + std::to_string(res.status));
    }
  });

  s.Post("/api/v1/search", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    auto q = parse_query(required(body, "query"));
    auto range = parse_range(required(body, "range"));
    auto bucket = bucket_from_string(field_or<std::string>(body, "bucket", "month"));
    auto line = engine_->evaluate(q, range, bucket, field_or<std::string>(body, "name", ""));
    auto out = line.to_json();
    out["bucket"] = to_string(bucket);
    out["range"] = to_json(range);
    send_json(res, out);
  }));

  s.Post("/api/v1/hits", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    auto q = parse_query(required(body, "query"));
    auto range = parse_range(required(body, "range"));
    auto page = engine_->page_hits(q, range, field_or<int>(body, "page", 1), field_or<int>(body, "page_size", 50));
    json hits = json::array();
    for (const auto& h : page.hits) hits.push_back(h.to_json());
    send_json(res, {{"hits", std::move(hits)}, {"total", page.total}, {"page", page.page}, {"page_size", page.page_size}});
  }));

  s.Post("/api/v1/export", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto format = export_format_from_string(req.has_param("format") ? req.get_param_value("format") : "csv");
    auto body = parse_body(req);
    auto q = parse_query(required(body, "query"));
    auto range = parse_range(required(body, "range"));
    // Render up front so an over-cap error is still a clean 400.
    auto rows = std::make_shared<std::vector<std::string>>();
    engine_->export_hits(q, range, format, [&](std::string_view chunk) { rows->emplace_back(chunk); });
    const char* type = format == ExportFormat::csv ? "text/csv; charset=utf-8" : "application/json; charset=utf-8";
    res.set_header("Content-Disposition",
                   std::string("attachment; filename=\"export.") + (format == ExportFormat::csv ? "csv" : "json") + "\"");
    res.set_chunked_content_provider(type, [rows, next = std::size_t{0}](std::size_t, httplib::DataSink& sink) mutable {
      // A few hundred rows per chunk.
      std::string chunk;
      while (next < rows->size() && chunk.size() < 64 * 1024) chunk += (*rows)[next++];
      if (!chunk.empty() && !sink.write(chunk.data(), chunk.size())) return false;
      if (next == rows->size()) sink.done();
      return true;
    });
  }));

  s.Get("/api/v1/entities", guarded([this](const httplib::Request& req, httplib::Response& res) {
    json out = json::array();
    for (const auto& e : engine_->entity_lookup(req.get_param_value("prefix"))) {
      out.push_back({{"kb_id", e.kb_id}, {"label", e.label}, {"articles", e.articles}, {"url", nel::wikidata_url(e.kb_id)}});
    }
    send_json(res, out);
  }));

  s.Get("/api/v1/outlets", guarded([this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& [id, n] : engine_->outlets()) out.push_back({{"outlet_id", id}, {"articles", n}});
    send_json(res, out);
  }));

  s.Get("/api/v1/topics", guarded([this](const httplib::Request&, httplib::Response& res) {
    auto counts = engine_->topic_counts();
    json out = json::array();
    for (auto label : analyzers::kTopicLabels) {
      std::string l(label);
      out.push_back({{"label", l}, {"articles", counts[l]}});
    }
    send_json(res, out);
  }));

  s.Get("/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"status", "ok"}, {"articles", engine_->index().size()}, {"revision", engine_->index().revision()}});
  }));

  s.Get("/metrics", guarded([this](const httplib::Request&, httplib::Response& res) {
    json out = metrics_ ? metrics_() : json::object();
    out["index"] = {{"articles", engine_->index().size()}, {"revision", engine_->index().revision()},
                    {"cache_hits", engine_->cache_hits()}};
    send_json(res, out);
  }));
}

void ApiServer::refresher(std::stop_token stop) {
  std::mutex m;
  std::condition_variable_any cv;
  std::unique_lock lock(m);
  while (!stop.stop_requested()) {
    try {
      engine_->index().refresh();
      engine_->refresh_entity_counts();
    } catch (const std::exception&) {
      // Store contention; the next round retries.
    }
    cv.wait_for(lock, stop, options_.refresh_interval, [] { return false; });
  }
}

int ApiServer::start(const std::string& host, int port) {
  int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
  if (options_.refresh_interval > Duration::zero()) {
    refresh_thread_ = std::jthread([this](std::stop_token st) { refresher(st); });
  }
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void ApiServer::run(const std::string& host, int port) {
  if (options_.refresh_interval > Duration::zero()) {
    refresh_thread_ = std::jthread([this](std::stop_token st) { refresher(st); });
  }
  if (!server_->listen(host, port)) throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
}

void ApiServer::stop() {
  server_->stop();
  if (listener_.joinable()) listener_.join();
  if (refresh_thread_.joinable()) {
    refresh_thread_.request_stop();
    refresh_thread_.join();
  }
}

}  // namespace retriever::query
