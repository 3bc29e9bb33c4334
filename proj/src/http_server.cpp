#include "crosstune/http_server.hpp"

#include <httplib.h>

#include <charconv>

#include "crosstune/json_codec.hpp"
#include "crosstune/protocol.hpp"

namespace crosstune {

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, const std::exception& e) {
  send_json(res, error_body(e.what()), http_status_for(e));
}

template <class Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  };
}

std::uint64_t query_u64(const httplib::Request& req, const std::string& key) {
  const std::string text = req.get_param_value(key);
  std::uint64_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw ValidationError("query parameter '" + key + "' must be a non-negative integer");
  }
  return value;
}

}  // namespace

std::pair<std::string, int> parse_bind_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ValidationError("bind address '" + address + "' must look like host:port");
  }
  int port = 0;
  const std::string digits = address.substr(colon + 1);
  const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || end != digits.data() + digits.size() || port < 0 || port > 65535) {
    throw ValidationError("bind address '" + address + "' has an invalid port");
  }
  return {address.substr(0, colon), port};
}

HttpServer::HttpServer(ControlService& service, HttpOptions options)
    : service_(service), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  auto& s = *server_;

  s.Post("/v1/pcas", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const PcaManifest manifest = manifest_from_json(parse_json(req.body));
           send_json(res, to_json(service_.register_pca(manifest)));
         }));

  s.Post(R"(/v1/pcas/([^/]+)/state)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           const std::string id = req.matches[1];
           StateReport report = state_report_from_json(parse_json(req.body));
           if (!report.pca_id.empty() && report.pca_id != id) {
             throw ValidationError("report pca_id '" + report.pca_id + "' does not match the URL");
           }
           report.pca_id = id;
           send_json(res, to_json(service_.submit_report(report)));
         }));

  s.Get(R"(/v1/pcas/([^/]+)/config)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          const std::string id = req.matches[1];
          std::optional<std::uint64_t> wait;
          if (req.has_param("wait_epoch")) wait = query_u64(req, "wait_epoch");
          auto timeout = options_.default_poll_timeout;
          if (req.has_param("timeout_ms")) {
            timeout = std::chrono::milliseconds(query_u64(req, "timeout_ms"));
          }
          timeout = std::min(timeout, options_.max_poll_timeout);
          send_json(res, to_json(service_.config(id, wait, timeout)));
        }));

  s.Post(R"(/v1/pcas/([^/]+)/ack)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           const std::string id = req.matches[1];
           const AckRequest ack = ack_request_from_json(parse_json(req.body));
           send_json(res, to_json(service_.acknowledge(id, ack.epoch)));
         }));

  s.Get("/v1/stats", guarded([this](const httplib::Request&, httplib::Response& res) {
          send_json(res, service_.stats());
        }));

  s.Get("/v1/history", guarded([this](const httplib::Request& req, httplib::Response& res) {
          std::int64_t from = 0;
          if (req.has_param("from")) from = static_cast<std::int64_t>(query_u64(req, "from"));
          res.set_content(service_.history_jsonl(from), "application/x-ndjson");
        }));

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(error_body(res.status == 404 ? "no such endpoint" : "request failed").dump(),
                      kJson);
    }
  });
}

int HttpServer::start() {
  if (thread_.joinable()) return port_;
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
    if (port_ < 0) throw BindError("cannot bind " + options_.host + " to an ephemeral port");
  } else {
    if (!server_->bind_to_port(options_.host, options_.port)) {
      throw BindError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    }
    port_ = options_.port;
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpServer::stop() {
  if (!thread_.joinable()) return;
  server_->stop();
  thread_.join();
}

}  // namespace crosstune
