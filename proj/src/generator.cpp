#include "prmkit/generator.hpp"

#include "prmkit/answer.hpp"
#include "prmkit/error.hpp"
#include "prmkit/mc.hpp"
#include "prmkit/segmenter.hpp"
#include "prmkit/text.hpp"

namespace prmkit {

LlmGenerator::LlmGenerator(std::shared_ptr<CompletionBackend> backend, double temperature, int max_tokens)
    : backend_(std::move(backend)), temperature_(temperature), max_tokens_(max_tokens) {
  if (!backend_) throw ValidationError("generator needs a backend");
}

std::string LlmGenerator::id() const { return "llm:" + backend_->id(); }

ReasoningTrace LlmGenerator::sample_trace(const Problem& problem, std::uint64_t seed) {
  SamplingParams params{temperature_, max_tokens_, seed, {}};
  const std::string text = backend_->complete(render_rollout_prompt(problem, {}), params);
  if (trim_view(text).empty()) throw ValidationError("generator returned an empty solution for " + problem.id);
  return ReasoningTrace::from_steps(problem.id, segment_sdn(text), id());
}

StepProposal LlmGenerator::next_step(const Problem& problem, std::span<const Step> prefix, std::uint64_t seed) {
  SamplingParams params{temperature_, max_tokens_, seed, {}};
  const std::string text = backend_->complete(render_rollout_prompt(problem, prefix), params);
  if (trim_view(text).empty()) throw ValidationError("generator returned an empty continuation for " + problem.id);
  const auto paragraphs = segment_sdn(text);
  StepProposal proposal;
  proposal.text = paragraphs.front().text;
  proposal.is_final = extract_final_answer(proposal.text).has_value();
  return proposal;
}

}  // namespace prmkit
