#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "prmkit/review.hpp"

namespace prmkit {

/// HTTP binding of ReviewService. Optionally serves a static UI bundle at /.
class ReviewServer {
 public:
  explicit ReviewServer(ReviewService& service, std::filesystem::path static_dir = {});
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Binds an ephemeral port and returns it (or -1).
  int bind_to_any_port(const std::string& host);
  bool bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace prmkit
