#include "prmkit/mc.hpp"

#include <algorithm>
#include <numeric>

#include "prmkit/assets.hpp"
#include "prmkit/error.hpp"
#include "prmkit/parallel.hpp"
#include "prmkit/rng.hpp"
#include "prmkit/text.hpp"

namespace prmkit {

namespace {

struct RolloutJob {
  int step_index;
  int rollout;
};

std::uint64_t trace_key(const ReasoningTrace& trace) { return stable_hash(join(trace.texts(), "\n\n")); }

RolloutOutcome run_rollout(const Problem& problem, const ReasoningTrace& trace, const RolloutJob& job,
                           const std::string& prompt, CompletionBackend& completer, const McConfig& config) {
  RolloutOutcome out;
  out.prefix_len = job.step_index + 1;
  SamplingParams params;
  params.temperature = config.temperature;
  params.max_tokens = config.max_completion_tokens;
  params.seed = derive_seed(config.seed, problem.id, trace_key(trace), job.step_index, job.rollout);
  for (int attempt = 0; attempt <= config.rollout_retries; ++attempt) {
    try {
      out.completion_text = completer.complete(prompt, params);
      out.failed = false;
      out.error.clear();
      break;
    } catch (const BackendError& e) {
      out.failed = true;
      out.error = e.what();
    }
  }
  if (out.failed) return out;
  out.token_cost = count_tokens(out.completion_text);
  auto answer = extract_final_answer(out.completion_text);
  if (!answer) answer = extract_final_answer(trace.steps[job.step_index].text);
  out.reached_correct = answer.has_value() && config.matcher(*answer, problem.gold_answer);
  return out;
}

std::vector<RolloutOutcome> run_jobs(const Problem& problem, const ReasoningTrace& trace,
                                     const std::vector<RolloutJob>& jobs, CompletionBackend& completer,
                                     const McConfig& config) {
  std::vector<std::string> prompts(trace.size());
  for (const auto& j : jobs) {
    if (prompts[j.step_index].empty()) {
      prompts[j.step_index] =
          render_rollout_prompt(problem, std::span(trace.steps).first(static_cast<std::size_t>(j.step_index) + 1));
    }
  }
  std::vector<RolloutOutcome> outcomes(jobs.size());
  parallel_for(jobs.size(), static_cast<std::size_t>(config.max_parallel), [&](std::size_t i) {
    outcomes[i] = run_rollout(problem, trace, jobs[i], prompts[jobs[i].step_index], completer, config);
  });
  return outcomes;
}

McStepResult summarize(std::vector<RolloutOutcome> outcomes) {
  McStepResult r;
  for (const auto& o : outcomes) {
    r.successes += o.reached_correct ? 1 : 0;
    r.failed_rollouts += o.failed ? 1 : 0;
  }
  r.label = r.successes >= 1 ? 1 : 0;
  r.outcomes = std::move(outcomes);
  return r;
}

}  // namespace

void McConfig::validate() const {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (max_completion_tokens < 1) throw ValidationError("max_completion_tokens must be >= 1");
  if (temperature < 0) throw ValidationError("temperature must be >= 0");
  if (rollout_retries < 0) throw ValidationError("rollout_retries must be >= 0");
  if (max_parallel < 1) throw ValidationError("max_parallel must be >= 1");
  if (!matcher) throw ValidationError("answer matcher is not set");
}

McStats& McStats::operator+=(const McStats& other) {
  rollouts += other.rollouts;
  token_cost += other.token_cost;
  failed_rollouts += other.failed_rollouts;
  return *this;
}

std::string render_rollout_prompt(const Problem& problem, std::span<const Step> prefix) {
  std::vector<std::string> texts;
  for (const auto& s : prefix) texts.push_back(s.text);
  std::string prompt(assets::rollout_prompt());
  prompt = replace_all(std::move(prompt), "{{problem}}", "\x01PROBLEM\x01");
  prompt = replace_all(std::move(prompt), "{{prefix}}", texts.empty() ? "(none)" : join(texts, "\n\n"));
  return replace_all(std::move(prompt), "\x01PROBLEM\x01", problem.statement);
}

McStepResult mc_label_step(const Problem& problem, const ReasoningTrace& trace, int step_index,
                           CompletionBackend& completer, const McConfig& config) {
  config.validate();
  if (step_index < 0 || step_index >= static_cast<int>(trace.size())) {
    throw ValidationError("step index " + std::to_string(step_index) + " out of range");
  }
  std::vector<RolloutJob> jobs;
  for (int r = 0; r < config.k; ++r) jobs.push_back({step_index, r});
  return summarize(run_jobs(problem, trace, jobs, completer, config));
}

AnnotatedTrace mc_annotate_trace(const Problem& problem, const ReasoningTrace& trace,
                                 CompletionBackend& completer, const McConfig& config, McStats* stats) {
  config.validate();
  const int n = static_cast<int>(trace.size());
  std::vector<RolloutJob> jobs;
  jobs.reserve(static_cast<std::size_t>(n) * config.k);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < config.k; ++r) jobs.push_back({i, r});
  }
  auto outcomes = run_jobs(problem, trace, jobs, completer, config);

  const bool correct = trace.final_answer.has_value() && config.matcher(*trace.final_answer, problem.gold_answer);
  const std::string annotator = "mc:" + completer.id();
  std::vector<StepAnnotation> anns;
  McStats local;
  for (int i = 0; i < n; ++i) {
    auto first = outcomes.begin() + static_cast<std::ptrdiff_t>(i) * config.k;
    McStepResult r = summarize(std::vector<RolloutOutcome>(first, first + config.k));
    std::string rationale = std::to_string(r.successes) + "/" + std::to_string(config.k) + " rollouts reached the gold answer";
    if (r.failed_rollouts) rationale += " (" + std::to_string(r.failed_rollouts) + " failed)";
    if (i == n - 1 && !correct && r.label == 1) {
      r.label = 0;
      rationale += "; final answer does not match, label set to 0";
    }
    for (const auto& o : r.outcomes) local.token_cost += o.token_cost;
    local.failed_rollouts += r.failed_rollouts;
    anns.push_back(StepAnnotation{i, r.label, std::move(rationale), std::nullopt, annotator});
  }
  local.rollouts = static_cast<long long>(jobs.size());
  AnnotatedTrace out = AnnotatedTrace::create(trace, std::move(anns), correct);
  if (stats) *stats += local;
  return out;
}

AgreementReport agreement_by_bins(std::span<const AnnotatedTrace> a, std::span<const AnnotatedTrace> b, int n_bins) {
  if (n_bins < 1) throw ValidationError("n_bins must be >= 1");
  if (a.size() != b.size()) {
    throw ValidationError("annotation sets differ in size: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (a.size() < static_cast<std::size_t>(n_bins)) {
    throw ValidationError(std::to_string(a.size()) + " traces cannot fill " + std::to_string(n_bins) + " bins");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& ta = a[i].trace();
    const auto& tb = b[i].trace();
    if (ta.problem_id != tb.problem_id || ta.texts() != tb.texts()) {
      throw ValidationError("trace " + std::to_string(i) + " differs between the two annotation sets (" +
                            ta.problem_id + " vs " + tb.problem_id + ")");
    }
  }
  std::vector<std::size_t> order(a.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::string> keys(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) keys[i] = join(a[i].trace().texts(), "\n");
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto kx = a[x].trace().size();
    const auto ky = a[y].trace().size();
    if (kx != ky) return kx < ky;
    if (a[x].trace().problem_id != a[y].trace().problem_id) return a[x].trace().problem_id < a[y].trace().problem_id;
    return keys[x] < keys[y];
  });

  const std::size_t base = a.size() / n_bins;
  const std::size_t extra = a.size() % n_bins;
  AgreementReport report;
  long long all_steps = 0;
  long long all_agree = 0;
  std::size_t cursor = 0;
  for (int bin = 0; bin < n_bins; ++bin) {
    const std::size_t size = base + (static_cast<std::size_t>(bin) >= n_bins - extra ? 1 : 0);
    BinAgreement row;
    row.bin = bin + 1;
    row.traces = static_cast<int>(size);
    long long agree = 0;
    for (std::size_t j = cursor; j < cursor + size; ++j) {
      const auto la = a[order[j]].labels();
      const auto lb = b[order[j]].labels();
      const int k = static_cast<int>(la.size());
      row.min_steps = j == cursor ? k : std::min(row.min_steps, k);
      row.max_steps = std::max(row.max_steps, k);
      for (std::size_t s = 0; s < la.size(); ++s) agree += la[s] == lb[s] ? 1 : 0;
      row.steps += k;
    }
    cursor += size;
    row.agreement = row.steps ? static_cast<double>(agree) / static_cast<double>(row.steps) : 0.0;
    all_steps += row.steps;
    all_agree += agree;
    report.bins.push_back(row);
  }
  report.overall = all_steps ? static_cast<double>(all_agree) / static_cast<double>(all_steps) : 0.0;
  return report;
}

}  // namespace prmkit
