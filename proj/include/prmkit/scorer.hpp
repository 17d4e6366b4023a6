#pragma once

#include <memory>
#include <string>
#include <vector>

#include "prmkit/backend.hpp"
#include "prmkit/types.hpp"

namespace prmkit {

/// A process reward model: one score in (0, 1) per step, where the score of
/// step i may only depend on the problem and steps 0..i.
class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual std::string id() const = 0;
  virtual std::vector<double> score_steps(const Problem& problem,
                                          const ReasoningTrace& trace) const = 0;
};

class ConstantScorer final : public StepScorer {
 public:
  explicit ConstantScorer(double value = 0.5);
  std::string id() const override;
  std::vector<double> score_steps(const Problem&, const ReasoningTrace& trace) const override;

 private:
  double value_;
};

/// 1 - s for a wrapped scorer.
class InvertedScorer final : public StepScorer {
 public:
  explicit InvertedScorer(std::shared_ptr<const StepScorer> inner);
  std::string id() const override;
  std::vector<double> score_steps(const Problem& problem,
                                  const ReasoningTrace& trace) const override;

 private:
  std::shared_ptr<const StepScorer> inner_;
};

/// Reference adapter: scores steps through an LLM judge with the judging
/// prompt, mapping label 1 to kScoreHigh and 0 to kScoreLow. The judge reads
/// the whole trace in one call, so scores are not prefix-restricted; their
/// correctness is up to the judge.
class JudgeScorer final : public StepScorer {
 public:
  JudgeScorer(std::shared_ptr<CompletionBackend> judge, int retries = 2);
  std::string id() const override;
  std::vector<double> score_steps(const Problem& problem,
                                  const ReasoningTrace& trace) const override;

 private:
  std::shared_ptr<CompletionBackend> judge_;
  int retries_;
};

/// Scores used by oracle-style scorers for a binary judgement.
inline constexpr double kScoreHigh = 0.99;
inline constexpr double kScoreLow = 0.01;

}  // namespace prmkit
