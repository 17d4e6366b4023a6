#include "prmkit/scorer.hpp"

#include <cmath>
#include <sstream>

#include "prmkit/error.hpp"
#include "prmkit/judge.hpp"

namespace prmkit {

ConstantScorer::ConstantScorer(double value) : value_(value) {
  if (!(value > 0.0 && value < 1.0)) throw ValidationError("constant score must lie in (0, 1)");
}

std::string ConstantScorer::id() const {
  std::ostringstream out;
  out << "constant:" << value_;
  return out.str();
}

std::vector<double> ConstantScorer::score_steps(const Problem&, const ReasoningTrace& trace) const {
  return std::vector<double>(trace.size(), value_);
}

InvertedScorer::InvertedScorer(std::shared_ptr<const StepScorer> inner) : inner_(std::move(inner)) {
  if (!inner_) throw ValidationError("inverted scorer needs an inner scorer");
}

std::string InvertedScorer::id() const { return "inverted:" + inner_->id(); }

std::vector<double> InvertedScorer::score_steps(const Problem& problem, const ReasoningTrace& trace) const {
  auto scores = inner_->score_steps(problem, trace);
  for (double& s : scores) s = 1.0 - s;
  return scores;
}

JudgeScorer::JudgeScorer(std::shared_ptr<CompletionBackend> judge, int retries)
    : judge_(std::move(judge)), retries_(retries) {
  if (!judge_) throw ValidationError("judge scorer needs a backend");
}

std::string JudgeScorer::id() const { return "judge:" + judge_->id(); }

std::vector<double> JudgeScorer::score_steps(const Problem& problem, const ReasoningTrace& trace) const {
  AnnotateOptions options;
  options.retries = retries_;
  const AnnotatedTrace annotated = annotate_trace(trace, problem, *judge_, options);
  std::vector<double> scores;
  for (int label : annotated.labels()) scores.push_back(label == 1 ? kScoreHigh : kScoreLow);
  return scores;
}

}  // namespace prmkit
