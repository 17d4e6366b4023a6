#include "prmkit/label_automaton.hpp"

#include "prmkit/error.hpp"

namespace prmkit {

std::vector<int> expected_labels(std::span<const LocalEventTag> tags) {
  if (tags.empty()) throw InvariantViolation("tag sequence is empty");
  std::vector<int> labels;
  labels.reserve(tags.size());
  bool clean = true;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const bool last = i + 1 == tags.size();
    if (tags[i].final_answer_matches.has_value() && !last) {
      throw MalformedTags("final_answer_matches set on step " + std::to_string(i) + ", which is not the last step");
    }
    int label = 0;
    switch (tags[i].event) {
      case LocalEvent::LocalError:
        label = 0;
        clean = false;
        break;
      case LocalEvent::SoundContinuation:
        label = clean ? 1 : 0;
        break;
      case LocalEvent::NewApproach:
      case LocalEvent::CorrectsPrior:
        label = 1;
        clean = true;
        break;
    }
    if (last && tags[i].final_answer_matches == false) label = 0;
    labels.push_back(label);
  }
  return labels;
}

std::vector<LabelViolation> validate_label_sequence(std::span<const LocalEventTag> tags, std::span<const int> labels) {
  if (tags.size() != labels.size()) {
    throw ValidationError("got " + std::to_string(labels.size()) + " labels for " + std::to_string(tags.size()) + " tags");
  }
  const auto expected = expected_labels(tags);
  std::vector<LabelViolation> out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i] != labels[i]) out.push_back({static_cast<int>(i), expected[i], labels[i]});
  }
  return out;
}

}  // namespace prmkit
