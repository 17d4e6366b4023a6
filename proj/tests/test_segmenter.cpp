#include <doctest.h>

#include <json.hpp>

#include "prmkit/error.hpp"
#include "prmkit/segmenter.hpp"
#include "prmkit/sim_world.hpp"
#include "prmkit/text.hpp"
#include "test_util.hpp"

using namespace prmkit;

namespace {

std::vector<std::string> texts_of(const std::vector<Step>& steps) {
  std::vector<std::string> out;
  for (const auto& s : steps) out.push_back(s.text);
  return out;
}

SegmentationConfig srw_config(int min_tokens = 8) {
  SegmentationConfig c;
  c.strategy = SegmentationStrategy::Srw;
  c.min_step_tokens = min_tokens;
  return c;
}

}  // namespace

TEST_CASE("double-newline split of the long solution fixture") {
  const auto text = testutil::read_file(testutil::fixture("long_cot_solution.txt"));
  const auto steps = segment_sdn(text);
  CHECK(steps.size() == 27);
  for (std::size_t i = 0; i < steps.size(); ++i) CHECK(steps[i].index == static_cast<int>(i));
  CHECK(validate_segmentation(text, steps).empty());
  CHECK(starts_with_phrase(steps[3].text, "wait"));
}

TEST_CASE("double-newline split rules") {
  CHECK(texts_of(segment_sdn("a\nb\n\nc")) == std::vector<std::string>{"a\nb", "c"});
  CHECK(texts_of(segment_sdn("a\n \t\n\n\nb")) == std::vector<std::string>{"a", "b"});
  CHECK(texts_of(segment_sdn("\n\n  a  \n\n\n\n")) == std::vector<std::string>{"a"});
  CHECK(texts_of(segment_sdn("a\r\n\r\nb")) == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(segment_sdn(""), EmptyInput);
  CHECK_THROWS_AS(segment_sdn(" \n\n\t"), EmptyInput);
}

TEST_CASE("reflection-word split") {
  const auto cfg = srw_config(3);
  const std::string text = "We add the two numbers to get 7. Wait, the second number was 5 not 4. So the sum is 8.";
  CHECK(texts_of(segment_srw(text, cfg)) ==
        std::vector<std::string>{"We add the two numbers to get 7.", "Wait, the second number was 5 not 4. So the sum is 8."});

  SUBCASE("matches inside words and mid-sentence do not split") {
    const std::string t = "Waiting is hard for us all. The step we verify is fine. Hmm maybe not at all though.";
    CHECK(texts_of(segment_srw(t, cfg)) ==
          std::vector<std::string>{"Waiting is hard for us all. The step we verify is fine.", "Hmm maybe not at all though."});
  }
  SUBCASE("decorated and multi-word openers split") {
    const std::string t = "First compute the product here. **Hold on**, the product is wrong here. \"Alternatively\" we try again now.";
    CHECK(segment_srw(t, cfg).size() == 3);
  }
  SUBCASE("a short segment merges into its predecessor") {
    const std::string t = "We add the two numbers and get 7. Wait, no. Alternatively, we subtract them to get 1.";
    CHECK(texts_of(segment_srw(t, cfg)) ==
          std::vector<std::string>{"We add the two numbers and get 7. Wait, no.", "Alternatively, we subtract them to get 1."});
  }
  SUBCASE("a short leading segment merges forward") {
    const std::string t = "Okay. Wait, we start from the given equation and expand it.";
    CHECK(texts_of(segment_srw(t, cfg)) == std::vector<std::string>{t});
  }
  SUBCASE("a line break starts a sentence") {
    const std::string t = "Compute the first value carefully\nwait, the value is negative after all";
    CHECK(segment_srw(t, cfg).size() == 2);
  }
  SUBCASE("content is preserved") {
    const auto long_text = testutil::read_file(testutil::fixture("long_cot_solution.txt"));
    const auto steps = segment_srw(long_text, srw_config());
    CHECK(validate_segmentation(long_text, steps).empty());
    for (std::size_t i = 1; i < steps.size(); ++i) CHECK(steps[i].token_count >= 8);
  }
  CHECK_THROWS_AS(segment_srw("  ", cfg), EmptyInput);
  SegmentationConfig no_words = cfg;
  no_words.reflection_words.clear();
  CHECK_THROWS_AS(segment_srw(text, no_words), ValidationError);
}

TEST_CASE("reflection word lists") {
  CHECK(parse_reflection_words("# comment\nWait\n\n  Hold   On \n") == std::vector<std::string>{"wait", "hold on"});
  const auto defaults = default_reflection_words();
  CHECK(std::find(defaults.begin(), defaults.end(), "wait") != defaults.end());
  testutil::TempDir dir;
  testutil::write_file(dir / "w.txt", "however\n");
  CHECK(load_reflection_words(dir / "w.txt") == std::vector<std::string>{"however"});
  testutil::write_file(dir / "empty.txt", "# nothing\n");
  CHECK_THROWS_AS(load_reflection_words(dir / "empty.txt"), ValidationError);
  CHECK_THROWS_AS(load_reflection_words(dir / "missing.txt"), ValidationError);
}

TEST_CASE("strategy names") {
  CHECK(parse_segmentation_strategy("SDN") == SegmentationStrategy::Sdn);
  CHECK(parse_segmentation_strategy("srw") == SegmentationStrategy::Srw);
  CHECK(parse_segmentation_strategy("llm") == SegmentationStrategy::LlmAssisted);
  CHECK_THROWS_AS(parse_segmentation_strategy("paragraph"), ValidationError);
  for (auto s : {SegmentationStrategy::Sdn, SegmentationStrategy::Srw, SegmentationStrategy::LlmAssisted}) {
    CHECK(parse_segmentation_strategy(to_string(s)) == s);
  }
}

TEST_CASE("flattening and content validation") {
  CHECK(flatten_linebreaks("a\n\nb\r\nc d") == "a b c d");
  const std::string original = "alpha beta\n\ngamma delta";
  CHECK(validate_segmentation(original, make_steps({"alpha  beta", "gamma\ndelta"})).empty());

  const auto dropped = validate_segmentation(original, make_steps({"alpha beta"}));
  REQUIRE(dropped.size() == 1);
  CHECK(dropped[0].offset == 10);
  const auto changed = validate_segmentation(original, make_steps({"alpha beta", "gamma delta!"}));
  REQUIRE(changed.size() == 1);
  CHECK(changed[0].offset == 22);
  const auto edited = validate_segmentation(original, make_steps({"alpha bet", "gamma delta"}));
  REQUIRE(edited.size() == 1);
  CHECK(edited[0].offset == 9);
}

TEST_CASE("step list parsing") {
  CHECK(parse_step_list("Here you go:\n```json\n[\"a\", \"b [c]\"]\n```") == std::vector<std::string>{"a", "b [c]"});
  CHECK(parse_step_list("[1, 2] then [\"x\"]") == std::vector<std::string>{"x"});
  CHECK_THROWS_AS(parse_step_list("no list"), ParseFailure);
  CHECK_THROWS_AS(parse_step_list("[]"), ParseFailure);
  CHECK_THROWS_AS(parse_step_list("[\"unterminated\""), ParseFailure);
}

TEST_CASE("LLM-assisted resegmentation") {
  const auto long_text = testutil::read_file(testutil::fixture("long_cot_solution.txt"));
  auto cfg = srw_config();
  cfg.max_steps = 200;

  SUBCASE("a faithful segmenter is accepted on the first attempt") {
    SimResegmenter backend(cfg);
    const auto r = resegment_with_llm(long_text, backend, cfg);
    CHECK_FALSE(r.fell_back);
    CHECK(r.attempts == 1);
    CHECK(r.failures.empty());
    CHECK(r.steps == segment_srw(flatten_linebreaks(long_text), cfg));
  }
  SUBCASE("the prompt carries the flattened text and limits") {
    testutil::ScriptedBackend backend({nlohmann::json({flatten_linebreaks("one\ntwo")}).dump()});
    const auto r = resegment_with_llm("one\ntwo", backend, cfg);
    CHECK(r.steps.size() == 1);
    const auto prompt = backend.prompts().at(0);
    CHECK(prompt.find("one two") != std::string::npos);
    CHECK(prompt.find(std::to_string(cfg.max_step_tokens)) != std::string::npos);
    CHECK(backend.params().at(0).temperature == 0.0);
  }
  SUBCASE("content drift is retried, then falls back to reflection-word splitting") {
    testutil::ScriptedBackend backend({"[\"We add the numbers.\"]"});
    cfg.retries = 2;
    const std::string text = "We add the numbers and get 7. Wait, the second number was 5 not 4.";
    const auto r = resegment_with_llm(text, backend, cfg);
    CHECK(r.fell_back);
    CHECK(r.attempts == 3);
    CHECK(r.failures.size() == 3);
    CHECK(backend.calls() == 3);
    CHECK(r.steps == segment_srw(text, cfg));
  }
  SUBCASE("a later valid attempt wins") {
    const std::string text = "first part of the text\nsecond part of the text";
    testutil::ScriptedBackend backend({"garbage", "[\"first part of the text\", \"second part of the text\"]"});
    const auto r = resegment_with_llm(text, backend, cfg);
    CHECK_FALSE(r.fell_back);
    CHECK(r.attempts == 2);
    CHECK(r.steps.size() == 2);
  }
  SUBCASE("length limits are enforced") {
    cfg.max_steps = 1;
    testutil::ScriptedBackend backend({"[\"a b\", \"c d\"]"});
    const auto r = resegment_with_llm("a b c d", backend, cfg);
    CHECK(r.fell_back);
    CHECK(r.failures.front().find("limit") != std::string::npos);
  }
  SUBCASE("backend errors propagate") {
    testutil::ScriptedBackend backend([](std::string_view, const SamplingParams&, int) -> std::string {
      throw BackendError("down", "http://x");
    });
    CHECK_THROWS_AS(resegment_with_llm("text", backend, cfg), BackendError);
  }
}

TEST_CASE("segment dispatches on strategy") {
  const std::string text = "We add the numbers and get 7.\n\nWait, the second number was 5 not 4, so it is 8.";
  SegmentationConfig cfg;
  cfg.strategy = SegmentationStrategy::Sdn;
  CHECK(segment(text, cfg).size() == 2);
  cfg.strategy = SegmentationStrategy::Srw;
  CHECK(segment(text, cfg) == segment_srw(text, cfg));
  cfg.strategy = SegmentationStrategy::LlmAssisted;
  CHECK_THROWS_AS(segment(text, cfg), ValidationError);
  SimResegmenter backend(cfg);
  CHECK(segment(text, cfg, &backend) == segment_srw(flatten_linebreaks(text), cfg));
  cfg.min_step_tokens = 0;
  CHECK_THROWS_AS(segment(text, cfg), ValidationError);
}
