#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "prmkit/backend.hpp"

namespace prmkit {

inline constexpr const char* kApiKeyEnv = "PRMKIT_API_KEY";

struct HttpBackendConfig {
  /// Base URL of an OpenAI-compatible API, e.g. "https://host/v1"; requests go
  /// to <endpoint>/chat/completions.
  std::string endpoint;
  std::string model;
  double timeout_s = 120.0;
  int max_in_flight = 4;
  /// Extra attempts after a transport error, 429 or 5xx.
  int max_retries = 3;
  double backoff_initial_s = 0.5;
  double backoff_max_s = 8.0;
  /// JSONL file receiving every request and response; empty disables.
  std::string audit_log;
  /// Taken from the environment (kApiKeyEnv), never from config files.
  std::string api_key;
};

/// Reads kApiKeyEnv; empty when unset.
std::string api_key_from_env();

/// Chat-completions client. Thread-safe; at most max_in_flight requests run
/// at once.
class HttpBackend final : public CompletionBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;

  std::string id() const override;
  std::string complete(std::string_view prompt, const SamplingParams& params) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot request with a temporary client.
std::string http_complete(const HttpBackendConfig& config, std::string_view prompt,
                          const SamplingParams& params);

}  // namespace prmkit
