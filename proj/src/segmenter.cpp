#include "prmkit/segmenter.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "prmkit/assets.hpp"
#include "prmkit/error.hpp"
#include "prmkit/text.hpp"

namespace prmkit {

namespace {

struct Span {
  std::size_t begin;
  std::size_t end;
};

std::vector<Step> steps_from_spans(std::string_view text, const std::vector<Span>& spans) {
  std::vector<std::string> texts;
  for (const auto& s : spans) {
    std::string t = trim(text.substr(s.begin, s.end - s.begin));
    if (!t.empty()) texts.push_back(std::move(t));
  }
  if (texts.empty()) throw EmptyInput();
  return make_steps(texts);
}

bool is_opening_decoration(char c) { return c == '*' || c == '"' || c == '\'' || c == '(' || c == '_'; }
bool is_closing_decoration(char c) { return c == '*' || c == '"' || c == '\'' || c == ')' || c == '_'; }

// Sentence starts: the first non-space character, and every non-space
// character that follows sentence punctuation or a line break.
std::vector<std::size_t> sentence_starts(std::string_view text) {
  std::vector<std::size_t> starts;
  std::size_t i = 0;
  while (i < text.size() && is_space(text[i])) ++i;
  if (i < text.size()) starts.push_back(i);
  for (; i < text.size(); ++i) {
    if (!is_space(text[i]) || i == 0) continue;
    std::size_t j = i;
    bool newline = false;
    while (j < text.size() && is_space(text[j])) {
      newline = newline || text[j] == '\n';
      ++j;
    }
    if (j >= text.size()) break;
    std::size_t k = i;
    while (k > 0 && is_closing_decoration(text[k - 1])) --k;
    const bool punct = k > 0 && (text[k - 1] == '.' || text[k - 1] == '!' || text[k - 1] == '?');
    if (newline || punct) starts.push_back(j);
    i = j - 1;
  }
  return starts;
}

bool opens_with_any(std::string_view text, const std::vector<std::string>& words) {
  std::size_t p = 0;
  while (p < text.size() && is_opening_decoration(text[p])) ++p;
  const std::string_view rest = text.substr(p);
  return std::any_of(words.begin(), words.end(),
                     [&](const std::string& w) { return starts_with_phrase(rest, w); });
}

std::size_t first_divergence(std::string_view a, std::string_view b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) return i;
  }
  return n;
}

std::size_t matching_bracket(std::string_view s, std::size_t open) {
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
    } else if (c == '[') {
      ++depth;
    } else if (c == ']' && --depth == 0) {
      return i;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::string_view to_string(SegmentationStrategy s) {
  switch (s) {
    case SegmentationStrategy::Sdn: return "sdn";
    case SegmentationStrategy::Srw: return "srw";
    case SegmentationStrategy::LlmAssisted: return "llm";
  }
  return "srw";
}

SegmentationStrategy parse_segmentation_strategy(std::string_view name) {
  const std::string n = to_lower(trim_view(name));
  if (n == "sdn") return SegmentationStrategy::Sdn;
  if (n == "srw") return SegmentationStrategy::Srw;
  if (n == "llm" || n == "llm-assisted" || n == "llmassisted") return SegmentationStrategy::LlmAssisted;
  throw ValidationError("unknown segmentation strategy '" + std::string(name) + "' (expected sdn, srw or llm)");
}

std::vector<std::string> parse_reflection_words(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::string w = normalize_whitespace(line);
    if (w.empty() || w.front() == '#') continue;
    words.push_back(to_lower(w));
  }
  return words;
}

std::vector<std::string> default_reflection_words() { return parse_reflection_words(assets::reflection_words()); }

std::vector<std::string> load_reflection_words(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open reflection word list " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto words = parse_reflection_words(buf.str());
  if (words.empty()) throw ValidationError("reflection word list " + path.string() + " is empty");
  return words;
}

void SegmentationConfig::validate() const {
  if (min_step_tokens < 1) throw ValidationError("min_step_tokens must be >= 1");
  if (max_steps < 1) throw ValidationError("max_steps must be >= 1");
  if (max_step_tokens < 1) throw ValidationError("max_step_tokens must be >= 1");
  if (min_step_tokens > max_step_tokens) throw ValidationError("min_step_tokens exceeds max_step_tokens");
  if (retries < 0) throw ValidationError("retries must be >= 0");
  if (strategy != SegmentationStrategy::Sdn && reflection_words.empty()) {
    throw ValidationError("reflection_words must be nonempty for the srw strategy");
  }
}

std::vector<Step> segment_sdn(std::string_view text) {
  std::vector<Span> spans;
  std::size_t seg_begin = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '\n') {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::size_t last_newline = i;
    int newlines = 0;
    while (j < text.size() && (text[j] == '\n' || text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) {
      if (text[j] == '\n') {
        ++newlines;
        last_newline = j;
      }
      ++j;
    }
    if (newlines >= 2) {
      spans.push_back({seg_begin, i});
      seg_begin = last_newline + 1;
    }
    i = last_newline + 1;
  }
  spans.push_back({seg_begin, text.size()});
  return steps_from_spans(text, spans);
}

std::vector<Step> segment_srw(std::string_view text, const SegmentationConfig& config) {
  if (config.reflection_words.empty()) throw ValidationError("reflection_words must be nonempty");
  if (trim_view(text).empty()) throw EmptyInput();
  std::vector<std::size_t> cuts;
  for (std::size_t s : sentence_starts(text)) {
    if (s > 0 && !trim_view(text.substr(0, s)).empty() && opens_with_any(text.substr(s), config.reflection_words)) {
      cuts.push_back(s);
    }
  }
  std::vector<Span> raw;
  std::size_t begin = 0;
  for (std::size_t c : cuts) {
    raw.push_back({begin, c});
    begin = c;
  }
  raw.push_back({begin, text.size()});

  const auto tokens = [&](const Span& s) { return count_tokens(text.substr(s.begin, s.end - s.begin)); };
  std::vector<Span> merged;
  for (const auto& s : raw) {
    const bool short_seg = tokens(s) < config.min_step_tokens;
    const bool short_first = merged.size() == 1 && tokens(merged.front()) < config.min_step_tokens;
    if (!merged.empty() && (short_seg || short_first)) {
      merged.back().end = s.end;
    } else {
      merged.push_back(s);
    }
  }
  return steps_from_spans(text, merged);
}

std::string flatten_linebreaks(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_break = false;
  for (char c : text) {
    if (c == '\n' || c == '\r') {
      if (!in_break) out.push_back(' ');
      in_break = true;
    } else {
      out.push_back(c);
      in_break = false;
    }
  }
  return out;
}

std::vector<SegmentationViolation> validate_segmentation(std::string_view original, std::span<const Step> steps) {
  std::vector<SegmentationViolation> out;
  std::vector<std::string> texts;
  for (const auto& s : steps) {
    if (trim_view(s.text).empty()) {
      out.push_back({0, "step " + std::to_string(s.index) + " is empty"});
      return out;
    }
    texts.push_back(s.text);
  }
  const std::string expected = normalize_whitespace(original);
  const std::string actual = normalize_whitespace(join(texts, " "));
  if (expected == actual) return out;
  const std::size_t at = first_divergence(expected, actual);
  std::string message;
  if (at >= actual.size()) {
    message = "steps end early; missing text from offset " + std::to_string(at);
  } else if (at >= expected.size()) {
    message = "steps add text at offset " + std::to_string(at);
  } else {
    message = "steps diverge from the original at offset " + std::to_string(at);
  }
  out.push_back({at, std::move(message)});
  return out;
}

std::string render_resegment_prompt(std::string_view flattened_text, const SegmentationConfig& config) {
  std::string prompt(assets::resegment_prompt());
  prompt = replace_all(std::move(prompt), "{{max_steps}}", std::to_string(config.max_steps));
  prompt = replace_all(std::move(prompt), "{{max_step_tokens}}", std::to_string(config.max_step_tokens));
  return replace_all(std::move(prompt), "{{text}}", flattened_text);
}

std::vector<std::string> parse_step_list(std::string_view raw) {
  for (std::size_t pos = raw.find('['); pos != std::string_view::npos; pos = raw.find('[', pos + 1)) {
    const std::size_t close = matching_bracket(raw, pos);
    if (close == std::string_view::npos) continue;
    const auto parsed = nlohmann::json::parse(raw.substr(pos, close - pos + 1), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_array() || parsed.empty()) continue;
    if (!std::all_of(parsed.begin(), parsed.end(), [](const auto& v) { return v.is_string(); })) continue;
    std::vector<std::string> out;
    for (const auto& v : parsed) out.push_back(v.template get<std::string>());
    return out;
  }
  throw ParseFailure("response contains no JSON array of strings");
}

ResegmentResult resegment_with_llm(std::string_view text, CompletionBackend& judge,
                                   const SegmentationConfig& config) {
  config.validate();
  if (trim_view(text).empty()) throw EmptyInput();
  const std::string flat = flatten_linebreaks(text);
  const std::string prompt = render_resegment_prompt(flat, config);
  SamplingParams params;
  params.temperature = 0.0;
  params.max_tokens = std::max(1024, 2 * count_tokens(flat) + 256);

  ResegmentResult result;
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    ++result.attempts;
    const std::string raw = judge.complete(prompt, params);
    std::string failure;
    try {
      const auto texts = parse_step_list(raw);
      if (static_cast<int>(texts.size()) > config.max_steps) {
        failure = "returned " + std::to_string(texts.size()) + " steps, limit " + std::to_string(config.max_steps);
      } else {
        auto steps = make_steps(texts);
        for (const auto& s : steps) {
          if (s.token_count > config.max_step_tokens) {
            failure = "step " + std::to_string(s.index) + " has " + std::to_string(s.token_count) +
                      " tokens, limit " + std::to_string(config.max_step_tokens);
            break;
          }
        }
        if (failure.empty()) {
          const auto violations = validate_segmentation(flat, steps);
          if (violations.empty()) {
            result.steps = std::move(steps);
            return result;
          }
          failure = violations.front().message;
        }
      }
    } catch (const ValidationError& e) {
      failure = e.what();
    }
    result.failures.push_back("attempt " + std::to_string(attempt + 1) + ": " + failure);
  }
  result.fell_back = true;
  result.steps = segment_srw(flat, config);
  return result;
}

std::vector<Step> segment(std::string_view text, const SegmentationConfig& config, CompletionBackend* judge) {
  config.validate();
  switch (config.strategy) {
    case SegmentationStrategy::Sdn: return segment_sdn(text);
    case SegmentationStrategy::Srw: return segment_srw(text, config);
    case SegmentationStrategy::LlmAssisted:
      if (!judge) throw ValidationError("llm segmentation needs a judge backend");
      return resegment_with_llm(text, *judge, config).steps;
  }
  return segment_srw(text, config);
}

}  // namespace prmkit
