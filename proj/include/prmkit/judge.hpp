#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prmkit/answer.hpp"
#include "prmkit/backend.hpp"
#include "prmkit/types.hpp"

namespace prmkit {

struct JudgeRequest {
  Problem problem;
  std::vector<Step> steps;
  std::string prompt_text;
};

struct VerdictEntry {
  int step = 0;  // the i in "STEP i"
  int score = 0;
  std::string reason;
};

struct JudgeVerdict {
  std::vector<VerdictEntry> entries;  // sorted by step, covering 0..K-1
};

/// Renders the judging template (assets/judge_prompt.txt unless another
/// template is given). Slots: {{problem}}, {{steps}}, {{gold_answer}}. Steps
/// are rendered as "STEP i: <text>" blocks separated by blank lines.
JudgeRequest build_judge_prompt(const Problem& problem, std::span<const Step> steps,
                                std::string_view prompt_template = {});

/// Finds the first JSON array of step objects in `raw`, ignoring surrounding
/// prose and code fences. Each object carries one "STEP i" key with a 0/1
/// score and a "Reason". Throws ParseFailure, CoverageMismatch, DomainError.
JudgeVerdict parse_judge_response(std::string_view raw, int expected_steps);

struct AnnotateOptions {
  /// Extra judge calls after a malformed response.
  int retries = 2;
  double temperature = 0.0;
  int max_tokens = 8192;
  AnswerMatcher matcher = default_answer_matcher();
};

/// One judge call per trace (plus retries with the parse error fed back).
/// The last label is forced to 0 when the trace's final answer does not match
/// the gold answer; the override is noted in that step's rationale. Throws
/// BackendError, or AnnotationFailed once retries are exhausted.
AnnotatedTrace annotate_trace(const ReasoningTrace& trace, const Problem& problem,
                              CompletionBackend& judge, const AnnotateOptions& options = {});

struct RejectRecord {
  std::string problem_id;
  std::string raw_response;
  std::string error;
};

struct BatchAnnotation {
  std::vector<DatasetRecord> annotated;  // input order, rejects omitted
  std::vector<RejectRecord> rejects;
};

/// Annotates traces on a bounded worker pool. AnnotationFailed traces become
/// rejects; BackendError aborts the batch.
BatchAnnotation annotate_dataset(std::span<const TraceRecord> traces, CompletionBackend& judge,
                                 const AnnotateOptions& options, std::size_t max_parallel);

std::size_t write_rejects(std::span<const RejectRecord> rejects, const std::filesystem::path& path);

}  // namespace prmkit
