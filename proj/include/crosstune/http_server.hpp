#pragma once

// JSON-over-HTTP front end for a ControlService.
//
//   POST /v1/pcas                      register a manifest
//   POST /v1/pcas/{id}/state           submit a state report
//   GET  /v1/pcas/{id}/config          config view; ?wait_epoch=n long-polls
//   POST /v1/pcas/{id}/ack             acknowledge an enacted epoch
//   GET  /v1/stats                     runtime statistics
//   GET  /v1/history?from=k            JSON Lines of records with step_index >= k

#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include "crosstune/service.hpp"

namespace httplib {
class Server;
}

namespace crosstune {

class BindError : public Error {
 public:
  using Error::Error;
};

struct HttpOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks an ephemeral port
  std::chrono::milliseconds default_poll_timeout{25000};
  std::chrono::milliseconds max_poll_timeout{60000};
};

class HttpServer {
 public:
  HttpServer(ControlService& service, HttpOptions options = {});
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  // Throws BindError if the address is unavailable.
  int start();
  void stop();
  int port() const { return port_; }

 private:
  void install_routes();

  ControlService& service_;
  HttpOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

// "host:port" -> (host, port). Throws ValidationError.
std::pair<std::string, int> parse_bind_address(const std::string& address);

}  // namespace crosstune
