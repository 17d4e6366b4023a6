#include "prmkit/judge.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <json.hpp>
#include <optional>

#include "prmkit/assets.hpp"
#include "prmkit/error.hpp"
#include "prmkit/parallel.hpp"
#include "prmkit/text.hpp"

namespace prmkit {

namespace {

using Json = nlohmann::json;

std::size_t matching_close(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      ++depth;
    } else if ((c == ']' || c == '}') && --depth == 0) {
      return c == ']' ? i : std::string_view::npos;
    }
  }
  return std::string_view::npos;
}

// "STEP 3", "step 3", "Step3" -> 3.
std::optional<int> step_key_index(const std::string& key) {
  const std::string k = to_lower(trim_view(key));
  if (k.rfind("step", 0) != 0) return std::nullopt;
  std::string_view rest = trim_view(std::string_view(k).substr(4));
  if (rest.empty()) return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), value);
  if (ec != std::errc() || ptr != rest.data() + rest.size() || value < 0) return std::nullopt;
  return value;
}

bool is_step_object(const Json& v) {
  if (!v.is_object()) return false;
  return std::any_of(v.items().begin(), v.items().end(),
                     [](const auto& kv) { return step_key_index(kv.key()).has_value(); });
}

std::optional<int> score_value(const Json& v) {
  if (v.is_boolean()) return std::nullopt;
  if (v.is_number_integer()) {
    const auto n = v.get<long long>();
    if (n == 0 || n == 1) return static_cast<int>(n);
    return std::nullopt;
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == 0.0 || d == 1.0) return static_cast<int>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    const std::string s = trim(v.get<std::string>());
    if (s == "0" || s == "1") return s == "1" ? 1 : 0;
  }
  return std::nullopt;
}

std::string reason_of(const Json& obj) {
  for (const auto& [k, v] : obj.items()) {
    if (to_lower(k) == "reason") return v.is_string() ? v.get<std::string>() : v.dump();
  }
  return {};
}

std::string step_key(int i) { return "STEP " + std::to_string(i); }

}  // namespace

JudgeRequest build_judge_prompt(const Problem& problem, std::span<const Step> steps,
                                std::string_view prompt_template) {
  if (steps.empty()) throw InvariantViolation("cannot judge an empty solution");
  std::vector<std::string> blocks;
  blocks.reserve(steps.size());
  for (const auto& s : steps) blocks.push_back(step_key(s.index) + ": " + s.text);
  std::string prompt(prompt_template.empty() ? assets::judge_prompt() : prompt_template);
  // Fill the steps last so solution text containing "{{...}}" is left alone.
  prompt = replace_all(std::move(prompt), "{{problem}}", "\x01PROBLEM\x01");
  prompt = replace_all(std::move(prompt), "{{gold_answer}}", "\x01GOLD\x01");
  prompt = replace_all(std::move(prompt), "{{steps}}", "\x01STEPS\x01");
  prompt = replace_all(std::move(prompt), "\x01PROBLEM\x01", problem.statement);
  prompt = replace_all(std::move(prompt), "\x01GOLD\x01", problem.gold_answer);
  prompt = replace_all(std::move(prompt), "\x01STEPS\x01", join(blocks, "\n\n"));
  return JudgeRequest{problem, std::vector<Step>(steps.begin(), steps.end()), std::move(prompt)};
}

JudgeVerdict parse_judge_response(std::string_view raw, int expected_steps) {
  std::optional<Json> array;
  for (std::size_t pos = raw.find('['); pos != std::string_view::npos; pos = raw.find('[', pos + 1)) {
    const std::size_t close = matching_close(raw, pos);
    if (close == std::string_view::npos) continue;
    Json parsed = Json::parse(raw.substr(pos, close - pos + 1), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_array() || parsed.empty()) continue;
    if (!std::all_of(parsed.begin(), parsed.end(), is_step_object)) continue;
    array = std::move(parsed);
    break;
  }
  if (!array) throw ParseFailure("no JSON array of step objects found in the judge response");

  std::vector<std::optional<VerdictEntry>> slots(static_cast<std::size_t>(std::max(expected_steps, 0)));
  for (const auto& obj : *array) {
    for (const auto& [k, v] : obj.items()) {
      const auto idx = step_key_index(k);
      if (!idx) continue;
      const std::string key = step_key(*idx);
      if (*idx >= expected_steps) {
        throw CoverageMismatch("unexpected " + key + " (solution has " + std::to_string(expected_steps) + " steps)", key);
      }
      if (slots[*idx]) throw CoverageMismatch("duplicate " + key, key);
      const auto score = score_value(v);
      if (!score) throw DomainError(key + " has score " + v.dump() + ", expected 0 or 1", key);
      slots[*idx] = VerdictEntry{*idx, *score, reason_of(obj)};
    }
  }
  JudgeVerdict verdict;
  for (int i = 0; i < expected_steps; ++i) {
    if (!slots[i]) throw CoverageMismatch("missing " + step_key(i), step_key(i));
    verdict.entries.push_back(std::move(*slots[i]));
  }
  return verdict;
}

AnnotatedTrace annotate_trace(const ReasoningTrace& trace, const Problem& problem,
                              CompletionBackend& judge, const AnnotateOptions& options) {
  const JudgeRequest request = build_judge_prompt(problem, trace.steps);
  const int k = static_cast<int>(trace.size());
  SamplingParams params;
  params.temperature = options.temperature;
  params.max_tokens = options.max_tokens;

  std::string prompt = request.prompt_text;
  std::string last_raw;
  std::string last_error;
  for (int attempt = 0; attempt <= options.retries; ++attempt) {
    last_raw = judge.complete(prompt, params);
    try {
      const JudgeVerdict verdict = parse_judge_response(last_raw, k);
      const bool correct = trace.final_answer.has_value() && options.matcher(*trace.final_answer, problem.gold_answer);
      std::vector<StepAnnotation> anns;
      anns.reserve(verdict.entries.size());
      for (const auto& e : verdict.entries) {
        anns.push_back(StepAnnotation{e.step, e.score, e.reason, std::nullopt, judge.id()});
      }
      if (!correct && anns.back().label != 0) {
        anns.back().label = 0;
        const std::string got = trace.final_answer ? "'" + *trace.final_answer + "'" : "no final answer";
        anns.back().rationale += (anns.back().rationale.empty() ? "" : " ") + std::string("[final-step rule: ") + got +
                                 " does not match '" + problem.gold_answer + "'; judge score 1 overridden to 0]";
      }
      return AnnotatedTrace::create(trace, std::move(anns), correct);
    } catch (const JudgeResponseError& e) {
      last_error = e.what();
    }
    prompt = request.prompt_text +
             "\n\nYour previous response could not be used: " + last_error +
             ". Reply with only the JSON array, one object per step from STEP 0 to " + step_key(k - 1) +
             ", each score 0 or 1.";
  }
  throw AnnotationFailed(trace.problem_id, last_raw, last_error);
}

BatchAnnotation annotate_dataset(std::span<const TraceRecord> traces, CompletionBackend& judge,
                                 const AnnotateOptions& options, std::size_t max_parallel) {
  std::vector<std::optional<DatasetRecord>> done(traces.size());
  std::vector<std::optional<RejectRecord>> failed(traces.size());
  parallel_for(traces.size(), max_parallel, [&](std::size_t i) {
    try {
      done[i] = DatasetRecord{traces[i].problem, annotate_trace(traces[i].trace, traces[i].problem, judge, options)};
    } catch (const AnnotationFailed& e) {
      failed[i] = RejectRecord{e.problem_id(), e.raw_response(), e.reason()};
    }
  });
  BatchAnnotation out;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (done[i]) out.annotated.push_back(std::move(*done[i]));
    if (failed[i]) out.rejects.push_back(std::move(*failed[i]));
  }
  return out;
}

std::size_t write_rejects(std::span<const RejectRecord> rejects, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  for (const auto& r : rejects) {
    nlohmann::ordered_json j;
    j["problem_id"] = r.problem_id;
    j["raw_response"] = r.raw_response;
    j["error"] = r.error;
    out << j.dump() << '\n';
  }
  if (!out) throw ValidationError("failed writing " + path.string());
  return rejects.size();
}

}  // namespace prmkit
