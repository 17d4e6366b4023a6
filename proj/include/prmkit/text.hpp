#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace prmkit {

bool is_space(char c);

std::string_view trim_view(std::string_view text);
std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

/// Whitespace tokenization. Step token counts and every length statistic
/// are measured in these tokens.
std::vector<std::string_view> split_whitespace(std::string_view text);
int count_tokens(std::string_view text);

/// Collapses every whitespace run to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string replace_all(std::string text, std::string_view from, std::string_view to);

/// Counts case-insensitive occurrences of `phrase` that start and end on word
/// boundaries.
int count_phrase(std::string_view text, std::string_view phrase);

/// True when `text` (after leading whitespace) opens with `phrase`,
/// case-insensitively, followed by a word boundary.
bool starts_with_phrase(std::string_view text, std::string_view phrase);

}  // namespace prmkit
