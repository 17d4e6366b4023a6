#include "prmkit/review_server.hpp"

#include <httplib.h>

#include "prmkit/error.hpp"

namespace prmkit {

struct ReviewServer::Impl {
  ReviewService& service;
  httplib::Server server;

  Impl(ReviewService& s, const std::filesystem::path& static_dir) : service(s) {
    const auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
      ApiRequest api;
      api.method = req.method;
      api.path = req.path;
      if (api.path.rfind("/api/", 0) == 0) api.path = api.path.substr(4);
      for (const auto& [k, v] : req.params) api.query[k] = v;
      api.body = req.body;
      const ApiResponse out = service.handle(api);
      res.status = out.status;
      res.set_content(out.body, "application/json");
    };
    if (!static_dir.empty()) {
      if (!server.set_mount_point("/", static_dir.string())) {
        throw ValidationError("static directory does not exist: " + static_dir.string());
      }
    }
    for (const char* pattern : {"/tasks", "/tasks/.*", "/progress", "/accuracy", "/api/.*"}) {
      server.Get(pattern, dispatch);
      server.Post(pattern, dispatch);
      server.Put(pattern, dispatch);
      server.Delete(pattern, dispatch);
      server.Patch(pattern, dispatch);
    }
  }
};

ReviewServer::ReviewServer(ReviewService& service, std::filesystem::path static_dir)
    : impl_(std::make_unique<Impl>(service, static_dir)) {}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool ReviewServer::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }

bool ReviewServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void ReviewServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void ReviewServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace prmkit
