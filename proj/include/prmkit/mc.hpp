#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prmkit/answer.hpp"
#include "prmkit/backend.hpp"
#include "prmkit/types.hpp"

// Monte-Carlo step labeling: k completions from each step prefix, hard label
// 1 iff at least one completion reaches the gold answer.
namespace prmkit {

struct McConfig {
  int k = 8;
  int max_completion_tokens = 4096;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  /// Retries per rollout on BackendError before the rollout counts as failed.
  int rollout_retries = 1;
  int max_parallel = 1;
  AnswerMatcher matcher = default_answer_matcher();

  void validate() const;
};

struct RolloutOutcome {
  int prefix_len = 0;  // steps kept, in [1, K]
  std::string completion_text;
  bool reached_correct = false;
  int token_cost = 0;
  bool failed = false;  // backend gave up; counted as not correct
  std::string error;
};

struct McStepResult {
  int label = 0;
  int successes = 0;
  int failed_rollouts = 0;
  std::vector<RolloutOutcome> outcomes;
};

struct McStats {
  long long rollouts = 0;
  long long token_cost = 0;
  long long failed_rollouts = 0;

  McStats& operator+=(const McStats& other);
};

/// Prompt for a continuation from steps[0..prefix_len).
std::string render_rollout_prompt(const Problem& problem, std::span<const Step> prefix);

McStepResult mc_label_step(const Problem& problem, const ReasoningTrace& trace, int step_index,
                           CompletionBackend& completer, const McConfig& config);

/// Labels every step. Annotator tag "mc:<completer id>"; rationales record
/// successes/k. Rollout failures are counted in `stats`, never hidden.
AnnotatedTrace mc_annotate_trace(const Problem& problem, const ReasoningTrace& trace,
                                 CompletionBackend& completer, const McConfig& config,
                                 McStats* stats = nullptr);

struct BinAgreement {
  int bin = 0;  // 1-based, fewest steps first
  int min_steps = 0;
  int max_steps = 0;
  int traces = 0;
  long long steps = 0;
  double agreement = 0.0;
};

struct AgreementReport {
  std::vector<BinAgreement> bins;
  double overall = 0.0;
};

/// Sorts traces by step count (ties by problem id, then step text), splits
/// them into n_bins equal-sized bins with the remainder going to the last
/// bins, and reports the fraction of steps whose labels agree per bin. `a` and
/// `b` must annotate the same traces. Throws ValidationError.
AgreementReport agreement_by_bins(std::span<const AnnotatedTrace> a,
                                  std::span<const AnnotatedTrace> b, int n_bins = 10);

}  // namespace prmkit
