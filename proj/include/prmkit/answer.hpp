#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace prmkit {

/// Canonical form used for answer comparison. Rules, in order:
///   1. trim and lowercase;
///   2. repeatedly strip surrounding math delimiters ($..$, $$..$$, \(..\),
///      \[..\], \boxed{..}), trailing periods and outer whitespace;
///   3. numeric strings become canonical decimals: thousands separators
///      removed, no leading zeros, no trailing fractional zeros, "-0" -> "0".
/// Total and idempotent. Multi-part answers are compared as one string.
std::string normalize_answer(std::string_view raw);

bool answers_match(std::string_view a, std::string_view b);

/// Pluggable answer equivalence for datasets whose answers need more than
/// string normalization.
using AnswerMatcher = std::function<bool(std::string_view, std::string_view)>;

AnswerMatcher default_answer_matcher();

/// Pulls the short final answer out of a step: the text after the last
/// "final answer" marker (optionally followed by ':' or "is"), else the
/// content of the last \boxed{...}. Empty result means no answer.
std::optional<std::string> extract_final_answer(std::string_view text);

}  // namespace prmkit
