#include "simready/service/http_server.h"

#include <fstream>

#include <httplib.h>

#include "simready/common/error.h"

namespace simready::service {

using nlohmann::json;

ErrorResponse error_response(const std::exception& e) {
  json details = json::array();
  int status = 500;
  std::string code = "internal";
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    status = 400;
    code = "validation_error";
    details = v->failures();
  } else if (const auto* p = dynamic_cast<const ParseError*>(&e)) {
    status = 400;
    code = "parse_error";
    details.push_back(p->field());
  } else if (dynamic_cast<const ConfigError*>(&e) != nullptr) {
    status = 400;
    code = "config_error";
  } else if (dynamic_cast<const NotFoundError*>(&e) != nullptr) {
    status = 404;
    code = "not_found";
  } else if (dynamic_cast<const ConflictError*>(&e) != nullptr) {
    status = 409;
    code = "conflict";
  } else if (dynamic_cast<const TransportError*>(&e) != nullptr) {
    status = 502;
    code = "upstream_error";
  }
  return {status, {{"code", code}, {"message", e.what()}, {"details", std::move(details)}}};
}

struct HttpServer::Impl {
  ReviewService& service;
  ServerOptions options;
  httplib::Server server;
  int port = -1;

  Impl(ReviewService& s, ServerOptions o) : service(s), options(std::move(o)) {}

  template <typename F>
  void json_route(const char* method, const std::string& pattern, F handler) {
    auto wrapped = [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        json body;
        if (!req.body.empty()) {
          body = json::parse(req.body, nullptr, false);
          if (body.is_discarded()) throw ParseError("body", "request body is not valid JSON");
        }
        const json out = handler(req, body);
        res.status = 200;
        res.set_content(out.dump(), "application/json");
      } catch (const std::exception& e) {
        const auto err = error_response(e);
        res.status = err.status;
        res.set_content(err.body.dump(), "application/json");
      }
    };
    if (std::string(method) == "GET") {
      server.Get(pattern, wrapped);
    } else {
      server.Post(pattern, wrapped);
    }
  }

  void send_error(httplib::Response& res, const std::exception& e) {
    const auto err = error_response(e);
    res.status = err.status;
    res.set_content(err.body.dump(), "application/json");
  }

  void routes() {
    // The default also sets SO_REUSEPORT, which lets a second server share a
    // busy port instead of failing to bind.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    using Req = httplib::Request;
    const std::string id = "([A-Za-z0-9_-]+)";
    json_route("GET", "/api/sessions", [this](const Req&, const json&) {
      return service.list_sessions();
    });
    json_route("POST", "/api/sessions", [this](const Req&, const json& body) {
      return service.create_session(body);
    });
    json_route("GET", "/api/sessions/" + id, [this](const Req& r, const json&) {
      return service.get_session(r.matches[1]);
    });
    json_route("POST", "/api/sessions/" + id + "/annotate", [this](const Req& r, const json&) {
      return service.annotate(r.matches[1]);
    });
    json_route("POST", "/api/sessions/" + id + "/simulate", [this](const Req& r, const json& body) {
      return service.simulate(r.matches[1], body);
    });
    json_route("POST", "/api/sessions/" + id + "/verdict", [this](const Req& r, const json& body) {
      return service.record_verdict(r.matches[1], body);
    });
    json_route("POST", "/api/sessions/" + id + "/requery", [this](const Req& r, const json&) {
      return service.requery(r.matches[1]);
    });
    json_route("POST", "/api/sessions/" + id + "/override", [this](const Req& r, const json& body) {
      return service.override_parameters(r.matches[1], body);
    });
    json_route("GET", "/api/jobs/" + id, [this](const Req& r, const json&) {
      return service.get_job(r.matches[1]);
    });

    server.Get("/api/jobs/" + id + "/frames/([0-9]+)", [this](const Req& r, httplib::Response& res) {
      try {
        const std::size_t k = std::stoull(r.matches[2]);
        res.set_content(service.frame_png(r.matches[1], k), "image/png");
      } catch (const std::out_of_range&) {
        send_error(res, NotFoundError("frame index out of range"));
      } catch (const std::exception& e) {
        send_error(res, e);
      }
    });
    server.Get("/api/jobs/" + id + "/trajectory", [this](const Req& r, httplib::Response& res) {
      try {
        const auto path = service.trajectory_path(r.matches[1]);
        std::ifstream in(path, std::ios::binary);
        if (!in) throw NotFoundError("trajectory file missing");
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        res.set_header("Content-Disposition",
                       "attachment; filename=\"" + std::string(r.matches[1]) + ".trj\"");
        res.set_content(std::move(bytes), "application/octet-stream");
      } catch (const std::exception& e) {
        send_error(res, e);
      }
    });
    // Unknown /api paths get a structured 404 instead of the static fallback.
    server.set_error_handler([this](const Req& r, httplib::Response& res) {
      if (res.status == 404 && r.path.starts_with("/api")) {
        send_error(res, NotFoundError("no route " + r.method + " " + r.path));
      }
    });

    if (!options.static_dir.empty()) {
      if (!server.set_mount_point("/", options.static_dir.string())) {
        throw ConfigError("static directory not found: " + options.static_dir.string());
      }
    }
  }
};

HttpServer::HttpServer(ReviewService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  if (impl_->options.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(impl_->options.host);
  } else if (impl_->server.bind_to_port(impl_->options.host, impl_->options.port)) {
    impl_->port = impl_->options.port;
  }
  if (impl_->port < 0) {
    throw Error("cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  }
  return impl_->port;
}

void HttpServer::listen() {
  if (impl_->port < 0) throw Error("listen() before bind()");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace simready::service
