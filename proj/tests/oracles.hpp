#pragma once

// Independent reference implementations used as test oracles. None of these
// call the library routines they check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prmkit/answer.hpp"
#include "prmkit/eval.hpp"
#include "prmkit/types.hpp"

namespace oracle {

/// Step labels written straight from the propagation / cessation rules.
inline std::vector<int> labels_from_rules(const std::vector<prmkit::LocalEventTag>& tags) {
  std::vector<int> out;
  bool error_in_effect = false;
  for (const auto& t : tags) {
    switch (t.event) {
      case prmkit::LocalEvent::LocalError:
        out.push_back(0);
        error_in_effect = true;
        break;
      case prmkit::LocalEvent::SoundContinuation:
        out.push_back(error_in_effect ? 0 : 1);
        break;
      case prmkit::LocalEvent::NewApproach:
      case prmkit::LocalEvent::CorrectsPrior:
        out.push_back(1);
        error_in_effect = false;
        break;
    }
  }
  if (!tags.empty() && tags.back().final_answer_matches == false) out.back() = 0;
  return out;
}

/// Probability that the simulated solver, started `remaining` operations from
/// the end in the given state, finishes with the true value. Propagates the
/// (clean, dirty) distribution one step at a time: a correction attempt
/// before each operation and before the final answer, a slip on each
/// operation taken while clean.
inline double chain_success(int remaining, bool clean, double err, double fix) {
  double p_clean = clean ? 1.0 : 0.0;
  double p_dirty = 1.0 - p_clean;
  for (int i = 0; i < remaining; ++i) {
    const double fixed = p_dirty * fix;
    p_clean += fixed;
    p_dirty -= fixed;
    const double slipped = p_clean * err;
    p_clean -= slipped;
    p_dirty += slipped;
  }
  return p_clean + p_dirty * fix;
}

/// Fraction of pools with at least one candidate among the first n whose
/// final answer equals the gold answer after normalization.
inline double pass_at_n(const std::vector<prmkit::CandidatePool>& pools, int n) {
  long long hit = 0;
  long long counted = 0;
  for (const auto& pool : pools) {
    if (pool.generator_failed) continue;
    ++counted;
    const std::string gold = prmkit::normalize_answer(pool.problem.gold_answer);
    for (int i = 0; i < n && i < static_cast<int>(pool.candidates.size()); ++i) {
      const auto& fa = pool.candidates[static_cast<std::size_t>(i)].final_answer;
      if (fa && prmkit::normalize_answer(*fa) == gold) {
        ++hit;
        break;
      }
    }
  }
  return counted == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(counted);
}

/// Reference binary cross-entropy for a single prediction.
inline double bce(int y, double s) { return -(y * std::log(s) + (1 - y) * std::log(1.0 - s)); }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<prmkit::LocalEventTag> random_tags(std::mt19937_64& gen, int max_len) {
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_int_distribution<int> ev(0, 3);
  std::bernoulli_distribution coin(0.5);
  std::vector<prmkit::LocalEventTag> tags(static_cast<std::size_t>(len(gen)));
  for (auto& t : tags) t.event = static_cast<prmkit::LocalEvent>(ev(gen));
  tags.back().final_answer_matches = coin(gen);
  return tags;
}

}  // namespace oracle
