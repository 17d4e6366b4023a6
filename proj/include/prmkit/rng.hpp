#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <type_traits>
#include <utility>

namespace prmkit {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a, then mixed. Stable across platforms and runs, unlike std::hash.
std::uint64_t stable_hash(std::string_view text);

namespace detail {
inline std::uint64_t seed_part(std::uint64_t v) { return mix64(v); }
inline std::uint64_t seed_part(std::string_view s) { return stable_hash(s); }
}  // namespace detail

/// Derives an independent seed from a base seed and a call key, e.g.
/// derive_seed(eval_seed, problem_id, candidate). Concurrent callers that use
/// the same key get the same stream regardless of scheduling.
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t base, const Parts&... parts) {
  std::uint64_t h = mix64(base ^ 0x9e3779b97f4a7c15ULL);
  auto fold = [&h](const auto& part) {
    using T = std::decay_t<decltype(part)>;
    std::uint64_t v;
    if constexpr (std::is_integral_v<T>) {
      v = detail::seed_part(static_cast<std::uint64_t>(part));
    } else {
      v = detail::seed_part(std::string_view(part));
    }
    h = mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
  };
  (fold(parts), ...);
  return h;
}

/// Seeded generator with platform-independent sampling. std::mt19937_64's
/// output sequence is fixed by the standard; the std distributions are not,
/// so all derived sampling is implemented here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace prmkit
