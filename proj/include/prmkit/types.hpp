#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace prmkit {

struct Problem {
  std::string id;
  std::string statement;
  std::string gold_answer;
  std::string source_tag;

  /// Validating constructor: id and gold answer must be nonempty.
  static Problem make(std::string id, std::string statement, std::string gold_answer,
                      std::string source_tag = {});

  bool operator==(const Problem&) const = default;
};

struct Step {
  int index = 0;
  std::string text;
  int token_count = 1;

  bool operator==(const Step&) const = default;
};

/// Builds contiguous steps 0..K-1 from texts; rejects whitespace-only texts.
std::vector<Step> make_steps(const std::vector<std::string>& texts);

struct ReasoningTrace {
  std::string problem_id;
  std::vector<Step> steps;
  std::optional<std::string> final_answer;
  std::string generator_tag;

  /// Final answer is extracted from the last step.
  static ReasoningTrace from_texts(std::string problem_id, const std::vector<std::string>& texts,
                                   std::string generator_tag);
  static ReasoningTrace from_steps(std::string problem_id, std::vector<Step> steps,
                                   std::string generator_tag);

  std::size_t size() const { return steps.size(); }
  std::vector<std::string> texts() const;

  bool operator==(const ReasoningTrace&) const = default;
};

enum class LocalEvent { LocalError, SoundContinuation, NewApproach, CorrectsPrior };

std::string_view to_string(LocalEvent event);
std::optional<LocalEvent> parse_local_event(std::string_view name);

struct LocalEventTag {
  LocalEvent event = LocalEvent::SoundContinuation;
  /// Only set on the last step of a trace.
  std::optional<bool> final_answer_matches;

  bool operator==(const LocalEventTag&) const = default;
};

struct StepAnnotation {
  int step_index = 0;
  int label = 0;
  std::string rationale;
  std::optional<LocalEventTag> local_tag;
  std::string annotator_tag;

  bool operator==(const StepAnnotation&) const = default;
};

/// A trace with one label per step. Immutable once created; `create` enforces
/// the invariants (one annotation per step, matching indices, labels in {0,1},
/// one annotator per trace, last label 0 when the solution is incorrect).
class AnnotatedTrace {
 public:
  static AnnotatedTrace create(ReasoningTrace trace, std::vector<StepAnnotation> annotations,
                               bool solution_correct);

  const ReasoningTrace& trace() const { return trace_; }
  const std::vector<StepAnnotation>& annotations() const { return annotations_; }
  bool solution_correct() const { return solution_correct_; }
  std::vector<int> labels() const;
  const std::string& annotator() const { return annotations_.front().annotator_tag; }
  bool has_local_tags() const;
  std::vector<LocalEventTag> local_tags() const;

  bool operator==(const AnnotatedTrace&) const = default;

 private:
  AnnotatedTrace() = default;

  ReasoningTrace trace_;
  std::vector<StepAnnotation> annotations_;
  bool solution_correct_ = false;
};

enum class SolutionClass { ErrorFree, ReflectionBased, Incorrect };

std::string_view to_string(SolutionClass c);

SolutionClass classify_solution(const AnnotatedTrace& annotated);

/// A problem with a single unannotated trace.
struct TraceRecord {
  Problem problem;
  ReasoningTrace trace;

  bool operator==(const TraceRecord&) const = default;
};

/// One line of the JSONL dataset.
struct DatasetRecord {
  Problem problem;
  AnnotatedTrace annotated;

  bool operator==(const DatasetRecord&) const = default;
};

std::vector<AnnotatedTrace> annotated_traces(std::span<const DatasetRecord> records);

}  // namespace prmkit
