#include <doctest.h>

#include <algorithm>
#include <json.hpp>
#include <random>

#include "oracles.hpp"
#include "prmkit/answer.hpp"
#include "prmkit/dataset.hpp"
#include "prmkit/error.hpp"
#include "prmkit/label_automaton.hpp"
#include "prmkit/rng.hpp"
#include "prmkit/sim_world.hpp"
#include "prmkit/text.hpp"
#include "prmkit/types.hpp"
#include "test_util.hpp"

using namespace prmkit;

namespace {

LocalEventTag tag(LocalEvent e) { return LocalEventTag{e, std::nullopt}; }

AnnotatedTrace simple_annotated(std::vector<int> labels, bool correct, const std::string& annotator = "a") {
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < labels.size(); ++i) texts.push_back("step " + std::to_string(i));
  auto trace = ReasoningTrace::from_texts("p", texts, "g");
  std::vector<StepAnnotation> anns;
  for (std::size_t i = 0; i < labels.size(); ++i) anns.push_back({static_cast<int>(i), labels[i], "", std::nullopt, annotator});
  return AnnotatedTrace::create(trace, anns, correct);
}

}  // namespace

TEST_CASE("problem construction validates id and gold answer") {
  CHECK_NOTHROW(Problem::make("p1", "What is 1+1?", "2", "toy"));
  CHECK_THROWS_AS(Problem::make("", "x", "2"), ValidationError);
  CHECK_THROWS_AS(Problem::make("p1", "x", "  "), ValidationError);
}

TEST_CASE("traces count whitespace tokens and extract the final answer") {
  const auto t = ReasoningTrace::from_texts("p", {"one two three", "So the Final answer: 42."}, "gen");
  REQUIRE(t.size() == 2);
  CHECK(t.steps[0].index == 0);
  CHECK(t.steps[1].index == 1);
  CHECK(t.steps[0].token_count == 3);
  CHECK(t.final_answer == std::optional<std::string>("42"));
  CHECK(t.texts() == std::vector<std::string>{"one two three", "So the Final answer: 42."});
  CHECK_THROWS_AS(ReasoningTrace::from_texts("p", {}, "gen"), ValidationError);
  CHECK_THROWS_AS(ReasoningTrace::from_texts("p", {"ok", "   "}, "gen"), ValidationError);
}

TEST_CASE("annotated trace invariants") {
  CHECK_NOTHROW(simple_annotated({1, 0, 1}, true));
  CHECK_THROWS_AS(simple_annotated({1, 1}, false), InvariantViolation);
  CHECK_THROWS_AS(simple_annotated({1, 2}, true), InvariantViolation);

  auto trace = ReasoningTrace::from_texts("p", {"a", "b"}, "g");
  SUBCASE("annotation count must match step count") {
    CHECK_THROWS_AS(AnnotatedTrace::create(trace, {{0, 1, "", std::nullopt, "x"}}, true), InvariantViolation);
  }
  SUBCASE("one annotator per trace") {
    CHECK_THROWS_AS(AnnotatedTrace::create(trace, {{0, 1, "", std::nullopt, "x"}, {1, 1, "", std::nullopt, "y"}}, true),
                    InvariantViolation);
  }
  SUBCASE("indices must be contiguous") {
    CHECK_THROWS_AS(AnnotatedTrace::create(trace, {{0, 1, "", std::nullopt, "x"}, {2, 1, "", std::nullopt, "x"}}, true),
                    InvariantViolation);
  }
  SUBCASE("final answer flag only on the last tag") {
    LocalEventTag flagged{LocalEvent::SoundContinuation, true};
    CHECK_THROWS_AS(AnnotatedTrace::create(trace, {{0, 1, "", flagged, "x"}, {1, 1, "", flagged, "x"}}, true),
                    InvariantViolation);
    CHECK_NOTHROW(AnnotatedTrace::create(
        trace, {{0, 1, "", tag(LocalEvent::SoundContinuation), "x"}, {1, 1, "", flagged, "x"}}, true));
  }
}

TEST_CASE("solutions classify as error-free, reflection-based or incorrect") {
  CHECK(classify_solution(simple_annotated({1, 1, 1}, true)) == SolutionClass::ErrorFree);
  CHECK(classify_solution(simple_annotated({1, 0, 1}, true)) == SolutionClass::ReflectionBased);
  CHECK(classify_solution(simple_annotated({1, 1, 0}, false)) == SolutionClass::Incorrect);
  CHECK(classify_solution(testutil::case_study().annotated) == SolutionClass::ReflectionBased);
}

TEST_CASE("answer normalization") {
  CHECK(normalize_answer("  42  ") == "42");
  CHECK(normalize_answer("$\\boxed{42}$") == "42");
  CHECK(normalize_answer("\\(3.50\\)") == "3.5");
  CHECK(normalize_answer("1,000") == "1000");
  CHECK(normalize_answer("007") == "7");
  CHECK(normalize_answer("-0") == "0");
  CHECK(normalize_answer("-0.00") == "0");
  CHECK(normalize_answer("12.") == "12");
  CHECK(normalize_answer("Briana.") == "briana");
  CHECK(normalize_answer("1,00") == "1,00");
  CHECK(answers_match("$$1{,}5$$", "1{,}5"));
  CHECK(answers_match("\\boxed{\\frac{1}{2}}", "\\frac{1}{2}"));
  CHECK_FALSE(answers_match("12", "21"));
  for (const char* s : {"$\\boxed{ 1,234.500 }$.", "  -007 ", "x^2 + 1", "", "\\[ 3 \\]", "0.0"}) {
    CAPTURE(s);
    const auto once = normalize_answer(s);
    CHECK(normalize_answer(once) == once);
  }
}

TEST_CASE("final answer extraction") {
  CHECK(extract_final_answer("Final answer: 426.") == std::optional<std::string>("426"));
  CHECK(extract_final_answer("so the final answer is **Briana**") == std::optional<std::string>("Briana"));
  CHECK(extract_final_answer("We get \\boxed{x^{2}} here") == std::optional<std::string>("x^{2}"));
  CHECK(extract_final_answer("final answer: 3\nmore text") == std::optional<std::string>("3"));
  CHECK_FALSE(extract_final_answer("no answer here").has_value());
  CHECK_FALSE(extract_final_answer("Final answer:").has_value());
}

TEST_CASE("case study fixture round-trips through JSONL") {
  const auto rec = testutil::case_study();
  CHECK(rec.annotated.trace().size() == 11);
  CHECK(rec.annotated.labels() == std::vector<int>{1, 1, 1, 1, 0, 0, 0, 0, 1, 1, 1});
  CHECK(rec.annotated.annotator() == "o1");
  CHECK(rec.problem.gold_answer == "Briana");
  CHECK(rec.annotated.has_local_tags());
  CHECK(decode_record(encode_record(rec)) == rec);

  testutil::TempDir dir;
  const auto path = dir / "d.jsonl";
  SimWorld world;
  auto records = sim_dataset(world, 25);
  records.push_back(rec);
  CHECK(write_dataset(records, path) == records.size());
  CHECK(read_dataset(path) == records);
}

TEST_CASE("dataset errors name the line and field") {
  testutil::TempDir dir;
  const auto good = encode_record(testutil::case_study());
  const auto path = dir / "bad.jsonl";

  SUBCASE("invalid JSON") {
    testutil::write_file(path, good + "\n{not json\n");
    try {
      read_dataset(path);
      FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("unequal parallel arrays") {
    auto j = nlohmann::json::parse(good);
    j["labels"].erase(j["labels"].begin());
    testutil::write_file(path, j.dump() + "\n");
    try {
      read_dataset(path);
      FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
      CHECK(e.line() == 1);
      CHECK(e.field() == "labels");
    }
  }
  SUBCASE("labels must be 0 or 1") {
    auto j = nlohmann::json::parse(good);
    j["labels"][0] = 2;
    testutil::write_file(path, j.dump() + "\n");
    CHECK_THROWS_AS(read_dataset(path), DatasetError);
  }
  SUBCASE("unknown local tag") {
    auto j = nlohmann::json::parse(good);
    j["local_tags"][0] = "Guess";
    testutil::write_file(path, j.dump() + "\n");
    try {
      read_dataset(path);
      FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
      CHECK(e.field() == "local_tags");
    }
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(read_dataset(dir / "absent.jsonl"), ValidationError); }
}

TEST_CASE("trace and problem files") {
  testutil::TempDir dir;
  SimWorld world;
  std::vector<TraceRecord> traces;
  for (const auto& r : sim_dataset(world, 5)) traces.push_back({r.problem, r.annotated.trace()});
  write_traces(traces, dir / "t.jsonl");
  CHECK(read_traces(dir / "t.jsonl") == traces);
  // Annotated records read as traces.
  write_dataset(sim_dataset(world, 5), dir / "d.jsonl");
  CHECK(read_traces(dir / "d.jsonl") == traces);

  const auto problems = sim_problems(world, 4);
  write_problems(problems, dir / "p.jsonl");
  CHECK(read_problems(dir / "p.jsonl") == problems);
  std::vector<Problem> dup = {problems[0], problems[1], problems[0]};
  write_problems(dup, dir / "dup.jsonl");
  try {
    read_problems(dir / "dup.jsonl");
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    CHECK(e.line() == 3);
    CHECK(e.field() == "problem_id");
  }
}

TEST_CASE("label automaton on the case study tags") {
  const auto rec = testutil::case_study();
  const auto tags = rec.annotated.local_tags();
  CHECK(expected_labels(tags) == std::vector<int>{1, 1, 1, 1, 0, 0, 0, 0, 1, 1, 1});
  CHECK(validate_label_sequence(tags, rec.annotated.labels()).empty());
}

TEST_CASE("label automaton rules") {
  using E = LocalEvent;
  auto seq = [](std::initializer_list<E> events, std::optional<bool> final_ok) {
    std::vector<LocalEventTag> tags;
    for (E e : events) tags.push_back(tag(e));
    tags.back().final_answer_matches = final_ok;
    return tags;
  };
  CHECK(expected_labels(seq({E::SoundContinuation, E::LocalError, E::SoundContinuation, E::SoundContinuation}, false)) ==
        std::vector<int>{1, 0, 0, 0});
  CHECK(expected_labels(seq({E::LocalError, E::NewApproach, E::SoundContinuation}, true)) == std::vector<int>{0, 1, 1});
  CHECK(expected_labels(seq({E::LocalError, E::SoundContinuation, E::CorrectsPrior, E::SoundContinuation}, true)) ==
        std::vector<int>{0, 0, 1, 1});
  CHECK(expected_labels(seq({E::SoundContinuation, E::SoundContinuation}, false)) == std::vector<int>{1, 0});
  CHECK(expected_labels(seq({E::CorrectsPrior}, false)) == std::vector<int>{0});

  CHECK_THROWS_AS(expected_labels(std::vector<LocalEventTag>{}), InvariantViolation);
  std::vector<LocalEventTag> misplaced = {LocalEventTag{E::SoundContinuation, true}, tag(E::SoundContinuation)};
  CHECK_THROWS_AS(expected_labels(misplaced), MalformedTags);

  const auto tags = seq({E::SoundContinuation, E::LocalError, E::SoundContinuation}, false);
  const auto v = validate_label_sequence(tags, std::vector<int>{1, 0, 1});
  REQUIRE(v.size() == 1);
  CHECK(v[0].index == 2);
  CHECK(v[0].expected == 0);
  CHECK(v[0].actual == 1);
  CHECK_THROWS_AS(validate_label_sequence(tags, std::vector<int>{1, 0}), ValidationError);
}

TEST_CASE("label automaton agrees with the rule oracle on random sequences") {
  std::mt19937_64 gen(99);
  for (int n = 0; n < 2000; ++n) {
    const auto tags = oracle::random_tags(gen, 25);
    REQUIRE(expected_labels(tags) == oracle::labels_from_rules(tags));
  }
}

TEST_CASE("text helpers") {
  CHECK(count_tokens("  a  b\tc\n") == 3);
  CHECK(normalize_whitespace(" a \n\n b\t") == "a b");
  CHECK(count_phrase("Wait, wait. Rethinking is not rethink.", "wait") == 2);
  CHECK(count_phrase("Rethinking is not rethink.", "rethink") == 1);
  CHECK(count_phrase("Hold on, hold   on", "hold on") == 1);
  CHECK(starts_with_phrase("  Wait, that is wrong", "wait"));
  CHECK_FALSE(starts_with_phrase("Waiting room", "wait"));
  CHECK(replace_all("a-b-c", "-", "+") == "a+b+c");
}

TEST_CASE("seeded randomness is stable") {
  CHECK(derive_seed(1, "p", 2) == derive_seed(1, "p", 2));
  CHECK(derive_seed(1, "p", 2) != derive_seed(1, "p", 3));
  CHECK(derive_seed(1, "p", 2) != derive_seed(2, "p", 2));
  CHECK(stable_hash("abc") == stable_hash("abc"));
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng r(7);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 3000; ++i) {
    const auto v = r.uniform_int(-1, 1);
    REQUIRE(v >= -1);
    REQUIRE(v <= 1);
    ++counts[static_cast<std::size_t>(v + 1)];
  }
  for (int c : counts) CHECK(c > 850);
  std::vector<int> items = {1, 2, 3, 4, 5};
  Rng s(3);
  s.shuffle(std::span(items));
  std::vector<int> sorted = items;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{1, 2, 3, 4, 5});
}
