#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prmkit/backend.hpp"
#include "prmkit/types.hpp"

namespace prmkit {

enum class SegmentationStrategy { Sdn, Srw, LlmAssisted };

std::string_view to_string(SegmentationStrategy s);
SegmentationStrategy parse_segmentation_strategy(std::string_view name);

/// The built-in reflection vocabulary (assets/reflection_words.txt).
std::vector<std::string> default_reflection_words();
/// One word or phrase per line; blank lines and '#' comments ignored.
std::vector<std::string> parse_reflection_words(std::string_view text);
std::vector<std::string> load_reflection_words(const std::filesystem::path& path);

struct SegmentationConfig {
  SegmentationStrategy strategy = SegmentationStrategy::Srw;
  std::vector<std::string> reflection_words = default_reflection_words();
  int min_step_tokens = 8;
  int max_steps = 40;
  int max_step_tokens = 600;
  /// Extra LLM attempts after a resegmentation fails validation.
  int retries = 2;

  void validate() const;
};

/// Splits on runs of two or more newlines (blank lines may hold spaces or
/// tabs). Whitespace-only segments are dropped. Throws EmptyInput.
std::vector<Step> segment_sdn(std::string_view text);

/// Splits before every sentence that opens with a reflection word, then merges
/// segments shorter than min_step_tokens into their predecessor (a short
/// leading segment merges forward). Throws EmptyInput.
std::vector<Step> segment_srw(std::string_view text, const SegmentationConfig& config);

/// Replaces every run of line breaks with a single space.
std::string flatten_linebreaks(std::string_view text);

struct SegmentationViolation {
  /// Offset of the first diverging character in the whitespace-normalized text.
  std::size_t offset = 0;
  std::string message;
};

/// Empty result means the steps reproduce the original up to whitespace.
std::vector<SegmentationViolation> validate_segmentation(std::string_view original,
                                                         std::span<const Step> steps);

std::string render_resegment_prompt(std::string_view flattened_text, const SegmentationConfig& config);

/// Extracts the step list from a resegmentation response: the first JSON
/// array of strings, tolerating surrounding prose and code fences. Throws
/// ParseFailure.
std::vector<std::string> parse_step_list(std::string_view raw);

struct ResegmentResult {
  std::vector<Step> steps;
  bool fell_back = false;  // true when SRW output replaced the LLM's
  int attempts = 0;
  /// One message per rejected attempt; non-empty together with fell_back
  /// reports the ValidationFailed outcome.
  std::vector<std::string> failures;
};

/// LLM-assisted resegmentation of flattened text with content-preservation
/// checking, bounded retries, and SRW fallback. BackendError propagates.
ResegmentResult resegment_with_llm(std::string_view text, CompletionBackend& judge,
                                   const SegmentationConfig& config);

/// Dispatches on config.strategy. `judge` is required for LlmAssisted.
std::vector<Step> segment(std::string_view text, const SegmentationConfig& config,
                          CompletionBackend* judge = nullptr);

}  // namespace prmkit
