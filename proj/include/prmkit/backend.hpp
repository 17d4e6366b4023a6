#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prmkit {

struct SamplingParams {
  double temperature = 0.0;
  int max_tokens = 1024;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> stop;
};

/// A text-completion endpoint: a remote LLM or a simulated one. Implementations
/// must allow concurrent complete() calls and throw BackendError on failure.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(std::string_view prompt, const SamplingParams& params) = 0;
};

}  // namespace prmkit
