#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prmkit/backend.hpp"
#include "prmkit/generator.hpp"
#include "prmkit/judge.hpp"
#include "prmkit/mc.hpp"
#include "prmkit/rng.hpp"
#include "prmkit/scorer.hpp"
#include "prmkit/segmenter.hpp"
#include "prmkit/types.hpp"

// A deterministic world of arithmetic-chain problems whose step correctness
// is known exactly.
//
// A problem is a start value and a hidden sequence of operations. A solution
// is an intro step, one step per operation, optional correction steps, and a
// final-answer step. The solver is a two-state chain (clean / dirty):
//   * an operation step taken while clean slips with probability err,
//     producing a wrong value (LocalError) and making the state dirty;
//   * while dirty, operations are applied correctly to the wrong value
//     (SoundContinuation that inherits the error);
//   * before each operation, and once more before the final answer, a dirty
//     solver emits a correction step with probability fix (CorrectsPrior or
//     NewApproach), which restores the true running value.
// The final answer is correct iff the chain ends clean. Every simulated model
// reads and writes plain text, so the same parser drives the generator, the
// completer, the judge and the oracle scorer.
namespace prmkit {

struct SimWorld {
  std::uint64_t seed = 0;
  double p_err = 0.15;
  double p_fix = 0.4;
  /// Default completion-model skill: err = 1 - min(1, (1 - p_err) * strength),
  /// fix = min(1, p_fix * strength).
  double strength = 1.0;
  int min_ops = 3;
  int max_ops = 24;

  void validate() const;
};

enum class ChainOp { Add, Subtract, Multiply };

struct ChainOperation {
  ChainOp op = ChainOp::Add;
  std::int64_t operand = 0;

  bool operator==(const ChainOperation&) const = default;
};

std::int64_t apply_op(ChainOp op, std::int64_t a, std::int64_t b);

struct ChainProblem {
  std::int64_t start = 0;
  std::vector<ChainOperation> ops;
  std::vector<std::int64_t> values;  // values[j]: true value after j operations

  static ChainProblem from_parts(std::int64_t start, std::vector<ChainOperation> ops);
  /// Inverse of statement(). Throws ValidationError on foreign text.
  static ChainProblem parse(std::string_view statement);

  std::string statement() const;
  int length() const { return static_cast<int>(ops.size()); }
  std::int64_t answer() const { return values.back(); }
};

std::string sim_problem_id(std::size_t index);
ChainProblem make_chain_problem(const SimWorld& world, std::string_view problem_id);
Problem sim_problem(const SimWorld& world, std::string_view problem_id);
std::vector<Problem> sim_problems(const SimWorld& world, std::size_t count, std::size_t first = 0);

/// Where a solution stands after a prefix of steps.
struct ChainState {
  int ops_done = 0;
  std::int64_t value = 0;
  bool clean = true;
  bool started = false;
  bool finished = false;
  std::optional<std::string> final_answer;
};

struct Replay {
  std::vector<LocalEventTag> tags;
  ChainState state;
};

/// Re-derives local event tags and the chain state from step texts. The
/// final-answer flag is set on the last tag when that step states an answer.
/// Unrecognized steps are treated as sound, state-preserving text.
Replay sim_replay(const ChainProblem& chain, std::span<const Step> steps);

struct CompleterRates {
  double err = 0.0;
  double fix = 0.0;
};

CompleterRates completer_rates(const SimWorld& world, double strength);

/// Closed-form probability that a continuation from `state` ends with the
/// correct answer under the given rates.
double sim_success_probability(const ChainProblem& chain, const ChainState& state,
                               CompleterRates rates);

/// Samples the next step from `state` (which is not modified).
StepProposal sim_next_step(const ChainProblem& chain, const ChainState& state,
                           CompleterRates rates, Rng& rng);

struct SimTrace {
  ReasoningTrace trace;
  std::vector<LocalEventTag> tags;  // ground truth, expected_labels gives gold labels
};

SimTrace sim_sample_trace(const ChainProblem& chain, const std::string& problem_id,
                          CompleterRates rates, std::uint64_t seed,
                          const std::string& generator_tag);

/// The world's reference trace for a problem, seeded by (world seed, problem id).
SimTrace sim_generate_trace(const SimWorld& world, std::string_view problem_id);

/// Gold-annotated record (annotator "oracle", local tags attached).
DatasetRecord sim_gold_record(const SimWorld& world, std::string_view problem_id);
std::vector<DatasetRecord> sim_dataset(const SimWorld& world, std::size_t count,
                                       std::size_t first = 0);

/// One completion from steps[0..prefix_len). When the prefix already states a
/// final answer the completion restates it.
RolloutOutcome sim_complete_from_prefix(const SimWorld& world, const Problem& problem,
                                        const ReasoningTrace& trace, int prefix_len,
                                        double strength, std::uint64_t seed);

/// Judging-format response whose scores are the automaton labels, each flipped
/// independently with probability 1 - judge_accuracy.
std::string sim_judge(const SimWorld& world, const JudgeRequest& request, double judge_accuracy,
                      std::uint64_t seed);

/// Continues rollout prompts (render_rollout_prompt) inside the world.
class SimCompleter final : public CompletionBackend {
 public:
  SimCompleter(SimWorld world, double strength);
  std::string id() const override;
  std::string complete(std::string_view prompt, const SamplingParams& params) override;

 private:
  SimWorld world_;
  double strength_;
};

/// Answers judging prompts (build_judge_prompt) inside the world.
class SimJudge final : public CompletionBackend {
 public:
  SimJudge(SimWorld world, double judge_accuracy);
  std::string id() const override;
  std::string complete(std::string_view prompt, const SamplingParams& params) override;

 private:
  SimWorld world_;
  double accuracy_;
};

/// Answers resegmentation prompts by returning the SRW segmentation of the
/// embedded text as a JSON array.
class SimResegmenter final : public CompletionBackend {
 public:
  explicit SimResegmenter(SegmentationConfig config);
  std::string id() const override;
  std::string complete(std::string_view prompt, const SamplingParams& params) override;

 private:
  SegmentationConfig config_;
};

class SimGenerator final : public SolutionGenerator {
 public:
  SimGenerator(SimWorld world, double strength);
  explicit SimGenerator(const SimWorld& world) : SimGenerator(world, world.strength) {}
  std::string id() const override;
  ReasoningTrace sample_trace(const Problem& problem, std::uint64_t seed) override;
  StepProposal next_step(const Problem& problem, std::span<const Step> prefix,
                         std::uint64_t seed) override;

 private:
  SimWorld world_;
  CompleterRates rates_;
  double strength_;
};

/// Scores each step by its automaton label (kScoreHigh / kScoreLow).
class SimOracleScorer final : public StepScorer {
 public:
  SimOracleScorer() = default;
  std::string id() const override;
  std::vector<double> score_steps(const Problem& problem,
                                  const ReasoningTrace& trace) const override;
};

}  // namespace prmkit
