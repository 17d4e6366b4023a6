#include "prmkit/types.hpp"

#include <algorithm>

#include "prmkit/answer.hpp"
#include "prmkit/error.hpp"
#include "prmkit/text.hpp"

namespace prmkit {

Problem Problem::make(std::string id, std::string statement, std::string gold_answer,
                      std::string source_tag) {
  if (trim_view(id).empty()) throw InvariantViolation("problem id must be nonempty");
  if (trim_view(gold_answer).empty()) {
    throw InvariantViolation("problem " + id + ": gold answer must be nonempty");
  }
  return Problem{std::move(id), std::move(statement), std::move(gold_answer), std::move(source_tag)};
}

std::vector<Step> make_steps(const std::vector<std::string>& texts) {
  std::vector<Step> steps;
  steps.reserve(texts.size());
  for (const auto& text : texts) {
    if (trim_view(text).empty()) {
      throw InvariantViolation("step " + std::to_string(steps.size()) + " is empty");
    }
    steps.push_back(Step{static_cast<int>(steps.size()), text, std::max(1, count_tokens(text))});
  }
  return steps;
}

ReasoningTrace ReasoningTrace::from_texts(std::string problem_id, const std::vector<std::string>& texts,
                                          std::string generator_tag) {
  return from_steps(std::move(problem_id), make_steps(texts), std::move(generator_tag));
}

ReasoningTrace ReasoningTrace::from_steps(std::string problem_id, std::vector<Step> steps,
                                          std::string generator_tag) {
  if (steps.empty()) throw InvariantViolation("trace for " + problem_id + " has no steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].index != static_cast<int>(i)) {
      throw InvariantViolation("step indices must be contiguous from 0");
    }
    if (trim_view(steps[i].text).empty()) {
      throw InvariantViolation("step " + std::to_string(i) + " is empty");
    }
  }
  ReasoningTrace trace;
  trace.problem_id = std::move(problem_id);
  trace.final_answer = extract_final_answer(steps.back().text);
  trace.steps = std::move(steps);
  trace.generator_tag = std::move(generator_tag);
  return trace;
}

std::vector<std::string> ReasoningTrace::texts() const {
  std::vector<std::string> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.text);
  return out;
}

std::string_view to_string(LocalEvent event) {
  switch (event) {
    case LocalEvent::LocalError: return "LocalError";
    case LocalEvent::SoundContinuation: return "SoundContinuation";
    case LocalEvent::NewApproach: return "NewApproach";
    case LocalEvent::CorrectsPrior: return "CorrectsPrior";
  }
  return "SoundContinuation";
}

std::optional<LocalEvent> parse_local_event(std::string_view name) {
  for (auto e : {LocalEvent::LocalError, LocalEvent::SoundContinuation, LocalEvent::NewApproach,
                 LocalEvent::CorrectsPrior}) {
    if (to_string(e) == name) return e;
  }
  return std::nullopt;
}

AnnotatedTrace AnnotatedTrace::create(ReasoningTrace trace, std::vector<StepAnnotation> annotations,
                                      bool solution_correct) {
  if (trace.steps.empty()) throw InvariantViolation("annotated trace has no steps");
  if (annotations.size() != trace.steps.size()) {
    throw InvariantViolation("expected " + std::to_string(trace.steps.size()) +
                             " annotations, got " + std::to_string(annotations.size()));
  }
  const std::size_t last = annotations.size() - 1;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& a = annotations[i];
    if (a.step_index != static_cast<int>(i)) {
      throw InvariantViolation("annotation " + std::to_string(i) + " references step " +
                               std::to_string(a.step_index));
    }
    if (a.label != 0 && a.label != 1) {
      throw InvariantViolation("label of step " + std::to_string(i) + " is not 0/1");
    }
    if (a.annotator_tag != annotations.front().annotator_tag) {
      throw InvariantViolation("all steps of a trace must share one annotator");
    }
    if (a.local_tag && a.local_tag->final_answer_matches.has_value() != (i == last)) {
      throw InvariantViolation("final_answer_matches must be set on the last step only");
    }
  }
  if (!solution_correct && annotations.back().label != 0) {
    throw InvariantViolation("incorrect solution must end with label 0");
  }
  AnnotatedTrace out;
  out.trace_ = std::move(trace);
  out.annotations_ = std::move(annotations);
  out.solution_correct_ = solution_correct;
  return out;
}

std::vector<int> AnnotatedTrace::labels() const {
  std::vector<int> out;
  out.reserve(annotations_.size());
  for (const auto& a : annotations_) out.push_back(a.label);
  return out;
}

bool AnnotatedTrace::has_local_tags() const {
  return std::all_of(annotations_.begin(), annotations_.end(),
                     [](const StepAnnotation& a) { return a.local_tag.has_value(); });
}

std::vector<LocalEventTag> AnnotatedTrace::local_tags() const {
  std::vector<LocalEventTag> out;
  for (const auto& a : annotations_) {
    if (a.local_tag) out.push_back(*a.local_tag);
  }
  return out;
}

std::string_view to_string(SolutionClass c) {
  switch (c) {
    case SolutionClass::ErrorFree: return "ErrorFree";
    case SolutionClass::ReflectionBased: return "ReflectionBased";
    case SolutionClass::Incorrect: return "Incorrect";
  }
  return "Incorrect";
}

SolutionClass classify_solution(const AnnotatedTrace& annotated) {
  if (!annotated.solution_correct()) return SolutionClass::Incorrect;
  const auto& anns = annotated.annotations();
  const bool all_correct =
      std::all_of(anns.begin(), anns.end(), [](const StepAnnotation& a) { return a.label == 1; });
  return all_correct ? SolutionClass::ErrorFree : SolutionClass::ReflectionBased;
}

std::vector<AnnotatedTrace> annotated_traces(std::span<const DatasetRecord> records) {
  std::vector<AnnotatedTrace> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.annotated);
  return out;
}

}  // namespace prmkit
