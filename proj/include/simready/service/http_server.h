#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "simready/service/review_service.h"

namespace simready::service {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path static_dir;  // workbench bundle mounted at "/"; optional
};

// {code, message, details} body and HTTP status for an exception.
struct ErrorResponse {
  int status = 500;
  nlohmann::json body;
};
ErrorResponse error_response(const std::exception& e);

// JSON API under /api plus the static mount. Handlers run concurrently.
class HttpServer {
 public:
  HttpServer(ReviewService& service, ServerOptions options);
  ~HttpServer();

  // Binds the socket; returns the bound port. Throws Error on failure.
  int bind();
  // Serves until stop(). Requires bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace simready::service
