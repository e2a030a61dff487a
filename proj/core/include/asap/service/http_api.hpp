#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "asap/service/session_manager.hpp"

namespace httplib {
class Server;
}

namespace asap::service {

struct HttpOptions {
  std::string host = "0.0.0.0";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
};

// JSON API over a SessionManager:
//   POST /sessions                      {conditions, sampler?, beta?, seed?}
//   GET  /sessions/{id}                 session descriptor
//   GET  /sessions/{id}/next            200 pair, 202 awaiting outcomes
//   POST /sessions/{id}/outcomes        {pair_id, choice: "first"|"second"}
//   GET  /sessions/{id}/scale
//   GET  /healthz
// Errors are {"code": ..., "message": ...} with a matching status.
class HttpApi {
 public:
  HttpApi(SessionManager& sessions, HttpOptions options);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  // Binds the listening socket; throws std::runtime_error when the port is
  // unavailable. Returns the bound port.
  int bind();
  // Serves until stop(); requires bind().
  void listen();
  void stop();
  bool running() const;

 private:
  void install_routes();

  SessionManager& sessions_;
  HttpOptions options_;
  std::unique_ptr<httplib::Server> server_;
  int bound_port_ = -1;
};

}  // namespace asap::service
