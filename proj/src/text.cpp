#include "prmkit/text.hpp"

#include <cctype>

namespace prmkit {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '\'';
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool equal_ci_at(std::string_view text, std::size_t pos, std::string_view phrase) {
  if (pos + phrase.size() > text.size()) return false;
  for (std::size_t i = 0; i < phrase.size(); ++i) {
    if (lower(text[pos + i]) != lower(phrase[i])) return false;
  }
  return true;
}

bool boundary_before(std::string_view text, std::size_t pos) {
  return pos == 0 || !is_word_char(text[pos - 1]);
}

bool boundary_after(std::string_view text, std::size_t end) {
  return end >= text.size() || !is_word_char(text[end]);
}

}  // namespace

std::string_view trim_view(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return text.substr(b, e - b);
}

std::string trim(std::string_view text) { return std::string(trim_view(text)); }

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = lower(c);
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

int count_tokens(std::string_view text) {
  int n = 0;
  bool in_token = false;
  for (char c : text) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++n;
    }
  }
  return n;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  if (from.empty()) return text;
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

int count_phrase(std::string_view text, std::string_view phrase) {
  if (phrase.empty()) return 0;
  int n = 0;
  for (std::size_t pos = 0; pos + phrase.size() <= text.size(); ++pos) {
    if (equal_ci_at(text, pos, phrase) && boundary_before(text, pos) &&
        boundary_after(text, pos + phrase.size())) {
      ++n;
      pos += phrase.size() - 1;
    }
  }
  return n;
}

bool starts_with_phrase(std::string_view text, std::string_view phrase) {
  text = trim_view(text);
  return !phrase.empty() && equal_ci_at(text, 0, phrase) && boundary_after(text, phrase.size());
}

}  // namespace prmkit
