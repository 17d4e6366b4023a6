#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "prmkit/backend.hpp"
#include "prmkit/types.hpp"

namespace prmkit {

struct StepProposal {
  std::string text;
  bool is_final = false;  // the step ends the solution
};

/// Produces solutions: whole traces for best-of-N, single next steps for
/// step-level search. Both are pure functions of their seed.
class SolutionGenerator {
 public:
  virtual ~SolutionGenerator() = default;
  virtual std::string id() const = 0;
  virtual ReasoningTrace sample_trace(const Problem& problem, std::uint64_t seed) = 0;
  virtual StepProposal next_step(const Problem& problem, std::span<const Step> prefix,
                                 std::uint64_t seed) = 0;
};

/// Reference adapter over an LLM endpoint. Whole solutions are split with the
/// double-newline rule; a next step is the first paragraph of a continuation.
class LlmGenerator final : public SolutionGenerator {
 public:
  LlmGenerator(std::shared_ptr<CompletionBackend> backend, double temperature = 1.0,
               int max_tokens = 4096);
  std::string id() const override;
  ReasoningTrace sample_trace(const Problem& problem, std::uint64_t seed) override;
  StepProposal next_step(const Problem& problem, std::span<const Step> prefix,
                         std::uint64_t seed) override;

 private:
  std::shared_ptr<CompletionBackend> backend_;
  double temperature_;
  int max_tokens_;
};

}  // namespace prmkit
