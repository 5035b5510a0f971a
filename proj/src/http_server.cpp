#include <httplib.h>

#include "noncomp/error.hpp"
#include "noncomp/service.hpp"

namespace noncomp::service {

struct HttpServer::Impl {
  httplib::Server server;
};

namespace {

void send(httplib::Response& res, const Reply& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type.c_str());
}

}  // namespace

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>()) {
  auto& svr = impl_->server;
  svr.Post("/api/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    send(res, service.create_session(req.body));
  });
  svr.Get(R"(/api/sessions/([^/]+)/next)",
          [&service](const httplib::Request& req, httplib::Response& res) {
            send(res, service.next(req.matches[1]));
          });
  svr.Post(R"(/api/sessions/([^/]+)/responses)",
           [&service](const httplib::Request& req, httplib::Response& res) {
             send(res, service.respond(req.matches[1], req.body));
           });
  auto admin = [&service](auto handler) {
    return [&service, handler](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_param("study_id")) {
        send(res, {400, R"({"error":"study_id query parameter is required"})"});
        return;
      }
      send(res, (service.*handler)(req.get_param_value("study_id")));
    };
  };
  svr.Get("/api/admin/export", admin(&Service::export_responses));
  svr.Get("/api/admin/progress", admin(&Service::progress));
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  auto& svr = impl_->server;
  if (port == 0) {
    const int bound = svr.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::Config, "cannot bind " + host);
    return bound;
  }
  if (!svr.bind_to_port(host, port)) {
    throw Error(ErrorCode::Config, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace noncomp::service
