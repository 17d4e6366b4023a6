#pragma once

#include <span>
#include <vector>

#include "prmkit/types.hpp"

// Executable form of the Error Propagation / Error Cessation rules. The state
// is whether an uncorrected error is in effect:
//   LocalError                   -> 0, state dirty
//   SoundContinuation            -> 1 when clean, 0 when dirty (propagation)
//   NewApproach | CorrectsPrior  -> 1, state clean (cessation)
// and the last step is forced to 0 when its final answer does not match.
namespace prmkit {

/// Throws MalformedTags when final_answer_matches is set on a non-last tag,
/// or InvariantViolation when `tags` is empty.
std::vector<int> expected_labels(std::span<const LocalEventTag> tags);

struct LabelViolation {
  int index = 0;
  int expected = 0;
  int actual = 0;
};

/// Empty result means labels == expected_labels(tags). Throws
/// ValidationError on a length mismatch.
std::vector<LabelViolation> validate_label_sequence(std::span<const LocalEventTag> tags,
                                                    std::span<const int> labels);

}  // namespace prmkit
