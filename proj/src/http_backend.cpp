#include "prmkit/http_backend.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "prmkit/error.hpp"

namespace prmkit {

using Json = nlohmann::json;

std::string api_key_from_env() {
  const char* key = std::getenv(kApiKeyEnv);
  return key ? std::string(key) : std::string();
}

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string base_path;
};

ParsedUrl parse_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("backend endpoint must start with http:// or https://: " + endpoint);
  const std::string scheme = endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ValidationError("unsupported endpoint scheme: " + scheme);
  const auto path_start = endpoint.find('/', scheme_end + 3);
  ParsedUrl url;
  url.origin = endpoint.substr(0, path_start);
  url.base_path = path_start == std::string::npos ? "" : endpoint.substr(path_start);
  while (!url.base_path.empty() && url.base_path.back() == '/') url.base_path.pop_back();
  if (url.origin.size() <= scheme_end + 3) throw ValidationError("backend endpoint has no host: " + endpoint);
  return url;
}

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

std::string extract_content(const std::string& body, const std::string& endpoint) {
  const Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw BackendError("response from " + endpoint + " is not JSON: " + excerpt(body), endpoint, 200);
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& c = j["choices"][0];
    if (c.contains("message") && c["message"].is_object() && c["message"].contains("content") &&
        c["message"]["content"].is_string()) {
      return c["message"]["content"].get<std::string>();
    }
    if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
  }
  throw BackendError("response from " + endpoint + " has no completion text: " + excerpt(body), endpoint, 200);
}

double retry_after_seconds(const httplib::Response& res) {
  if (!res.has_header("Retry-After")) return -1.0;
  try {
    return std::stod(res.get_header_value("Retry-After"));
  } catch (const std::exception&) {
    return -1.0;
  }
}

}  // namespace

struct HttpBackend::Impl {
  HttpBackendConfig config;
  ParsedUrl url;
  std::mutex slots_mutex;
  std::condition_variable slots_cv;
  int in_flight = 0;
  std::mutex audit_mutex;

  explicit Impl(HttpBackendConfig c) : config(std::move(c)), url(parse_endpoint(config.endpoint)) {
    if (config.model.empty()) throw ValidationError("backend model must be set");
    if (config.max_in_flight < 1) throw ValidationError("backend max_in_flight must be >= 1");
    if (config.max_retries < 0) throw ValidationError("backend max_retries must be >= 0");
  }

  void acquire() {
    std::unique_lock lock(slots_mutex);
    slots_cv.wait(lock, [&] { return in_flight < config.max_in_flight; });
    ++in_flight;
  }

  void release() {
    {
      std::lock_guard lock(slots_mutex);
      --in_flight;
    }
    slots_cv.notify_one();
  }

  void audit(const Json& request, int status, const std::string& response, const std::string& error) {
    if (config.audit_log.empty()) return;
    Json entry;
    entry["endpoint"] = config.endpoint;
    entry["request"] = request;
    entry["status"] = status;
    entry["response"] = response;
    if (!error.empty()) entry["error"] = error;
    std::lock_guard lock(audit_mutex);
    std::ofstream out(config.audit_log, std::ios::app | std::ios::binary);
    out << entry.dump() << '\n';
  }

  std::string complete(std::string_view prompt, const SamplingParams& params) {
    Json request;
    request["model"] = config.model;
    request["messages"] = Json::array({Json{{"role", "user"}, {"content", std::string(prompt)}}});
    request["temperature"] = params.temperature;
    request["max_tokens"] = params.max_tokens;
    if (params.seed) request["seed"] = *params.seed;
    if (!params.stop.empty()) request["stop"] = params.stop;
    const std::string body = request.dump();
    const std::string path = url.base_path + "/chat/completions";

    httplib::Client client(url.origin);
    const auto secs = static_cast<time_t>(config.timeout_s);
    const auto usecs = static_cast<time_t>((config.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);

    double backoff = config.backoff_initial_s;
    std::string last_error;
    int last_status = 0;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
      double wait = backoff;
      acquire();
      auto res = client.Post(path, headers, body, "application/json");
      release();
      if (!res) {
        last_status = 0;
        last_error = "request to " + config.endpoint + " failed: " + httplib::to_string(res.error());
        audit(request, 0, "", last_error);
      } else {
        last_status = res->status;
        if (res->status >= 200 && res->status < 300) {
          try {
            std::string content = extract_content(res->body, config.endpoint);
            audit(request, res->status, res->body, "");
            return content;
          } catch (const BackendError& e) {
            audit(request, res->status, res->body, e.what());
            throw;
          }
        }
        last_error = "endpoint " + config.endpoint + " returned HTTP " + std::to_string(res->status) + ": " +
                     excerpt(res->body);
        audit(request, res->status, res->body, last_error);
        const bool retryable = res->status == 429 || res->status >= 500;
        if (!retryable) throw BackendError(last_error, config.endpoint, res->status);
        const double hinted = retry_after_seconds(*res);
        if (hinted >= 0) wait = std::min(hinted, config.backoff_max_s);
      }
      if (attempt < config.max_retries) {
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        backoff = std::min(backoff * 2.0, config.backoff_max_s);
      }
    }
    if (last_status == 429) throw RateLimited(last_error, config.endpoint, 429);
    throw BackendError(last_error, config.endpoint, last_status);
  }
};

HttpBackend::HttpBackend(HttpBackendConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::id() const { return "http:" + impl_->config.model; }

std::string HttpBackend::complete(std::string_view prompt, const SamplingParams& params) {
  return impl_->complete(prompt, params);
}

std::string http_complete(const HttpBackendConfig& config, std::string_view prompt, const SamplingParams& params) {
  HttpBackend backend(config);
  return backend.complete(prompt, params);
}

}  // namespace prmkit
