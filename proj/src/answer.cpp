#include "prmkit/answer.hpp"

#include <cctype>

#include "prmkit/text.hpp"

namespace prmkit {

namespace {

bool strip_wrapper(std::string& s, std::string_view open, std::string_view close) {
  if (s.size() < open.size() + close.size()) return false;
  if (s.compare(0, open.size(), open) != 0) return false;
  if (s.compare(s.size() - close.size(), close.size(), close) != 0) return false;
  s = trim(std::string_view(s).substr(open.size(), s.size() - open.size() - close.size()));
  return true;
}

// "\boxed{...}" only when the opening brace closes at the very end.
bool strip_boxed(std::string& s) {
  constexpr std::string_view open = "\\boxed{";
  if (s.size() <= open.size() || s.compare(0, open.size(), open) != 0 || s.back() != '}') {
    return false;
  }
  int depth = 0;
  for (std::size_t i = open.size() - 1; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0 && i != s.size() - 1) return false;
  }
  s = trim(std::string_view(s).substr(open.size(), s.size() - open.size() - 1));
  return true;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

// Integer part with optional thousands separators: 1234 or 1,234,567.
bool valid_integer_part(std::string_view s) {
  if (s.find(',') == std::string_view::npos) return all_digits(s);
  const std::size_t first = s.find(',');
  if (first == 0 || first > 3 || !all_digits(s.substr(0, first))) return false;
  std::size_t pos = first;
  while (pos < s.size()) {
    if (s[pos] != ',' || pos + 4 > s.size() || !all_digits(s.substr(pos + 1, 3))) return false;
    pos += 4;
  }
  return true;
}

std::optional<std::string> canonical_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  const std::size_t dot = s.find('.');
  std::string_view int_part = s.substr(0, dot);
  std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (dot != std::string_view::npos && !all_digits(frac_part)) return std::nullopt;
  if (int_part.empty()) {
    if (frac_part.empty()) return std::nullopt;
  } else if (!valid_integer_part(int_part)) {
    return std::nullopt;
  }
  std::string digits;
  for (char c : int_part) {
    if (c != ',') digits.push_back(c);
  }
  const std::size_t nz = digits.find_first_not_of('0');
  digits = nz == std::string::npos ? "0" : digits.substr(nz);
  std::string frac(frac_part);
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  std::string out = digits;
  if (!frac.empty()) out += "." + frac;
  if (negative && out != "0") out = "-" + out;
  return out;
}

}  // namespace

std::string normalize_answer(std::string_view raw) {
  std::string s = to_lower(trim_view(raw));
  for (bool changed = true; changed;) {
    changed = false;
    while (!s.empty() && s.back() == '.') {
      s.pop_back();
      changed = true;
    }
    const std::size_t before = s.size();
    s = trim(s);
    changed = changed || s.size() != before;
    changed = strip_wrapper(s, "$$", "$$") || changed;
    changed = strip_wrapper(s, "$", "$") || changed;
    changed = strip_wrapper(s, "\\(", "\\)") || changed;
    changed = strip_wrapper(s, "\\[", "\\]") || changed;
    changed = strip_boxed(s) || changed;
  }
  if (auto num = canonical_decimal(s)) return *num;
  return s;
}

bool answers_match(std::string_view a, std::string_view b) {
  return normalize_answer(a) == normalize_answer(b);
}

AnswerMatcher default_answer_matcher() {
  return [](std::string_view a, std::string_view b) { return answers_match(a, b); };
}

std::optional<std::string> extract_final_answer(std::string_view text) {
  const std::string lower = to_lower(text);
  constexpr std::string_view marker = "final answer";
  const std::size_t pos = lower.rfind(marker);
  std::string answer;
  if (pos != std::string::npos) {
    std::string_view rest = std::string_view(text).substr(pos + marker.size());
    rest = trim_view(rest);
    if (!rest.empty() && rest.front() == ':') {
      rest.remove_prefix(1);
    } else if (rest.size() >= 2 && to_lower(rest.substr(0, 2)) == "is" &&
               (rest.size() == 2 || is_space(rest[2]) || rest[2] == ':')) {
      rest.remove_prefix(2);
      rest = trim_view(rest);
      if (!rest.empty() && rest.front() == ':') rest.remove_prefix(1);
    }
    const std::size_t eol = rest.find('\n');
    answer = trim(rest.substr(0, eol));
    while (!answer.empty() && (answer.front() == '*' || is_space(answer.front()))) answer.erase(0, 1);
    while (!answer.empty() && (answer.back() == '*' || answer.back() == '.' || is_space(answer.back()))) answer.pop_back();
  } else {
    const std::size_t box = text.rfind("\\boxed{");
    if (box == std::string_view::npos) return std::nullopt;
    int depth = 0;
    const std::size_t start = box + 7;
    for (std::size_t i = start - 1; i < text.size(); ++i) {
      if (text[i] == '{') ++depth;
      if (text[i] == '}' && --depth == 0) {
        answer = trim(text.substr(start, i - start));
        break;
      }
    }
  }
  if (answer.empty()) return std::nullopt;
  return answer;
}

}  // namespace prmkit
