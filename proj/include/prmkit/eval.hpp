#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prmkit/generator.hpp"
#include "prmkit/mc.hpp"
#include "prmkit/scorer.hpp"
#include "prmkit/types.hpp"

namespace prmkit {

/// How a whole solution is scored from its step scores.
enum class SolutionScore { Final, Min };

SolutionScore parse_solution_score(std::string_view name);
double solution_score(std::span<const double> step_scores, SolutionScore mode = SolutionScore::Final);

/// Index of the candidate with the highest solution score; ties go to the
/// lowest index. Throws ValidationError on an empty pool or empty scores.
std::size_t best_of_n(std::span<const std::vector<double>> candidate_scores,
                      SolutionScore mode = SolutionScore::Final);

/// N sampled candidates per problem; candidate i of a problem is seeded by
/// (seed, problem id, i), so a pool of N is a prefix of a pool of M > N.
struct CandidatePool {
  Problem problem;
  std::vector<ReasoningTrace> candidates;
  bool generator_failed = false;
  std::string error;
};

std::vector<CandidatePool> sample_pools(std::span<const Problem> problems,
                                        SolutionGenerator& generator, int n, std::uint64_t seed,
                                        std::size_t max_parallel = 1);

bool trace_correct(const Problem& problem, const ReasoningTrace& trace);

struct ProblemRow {
  std::string problem_id;
  int chosen = -1;
  bool correct = false;
  bool any_correct = false;
  bool skipped = false;
};

struct PrmAtNResult {
  double accuracy = 0.0;  // over non-skipped problems
  double pass_at_n = 0.0;
  int n = 0;
  std::size_t problems = 0;
  std::size_t skipped = 0;
  std::vector<ProblemRow> rows;
};

/// Best-of-N accuracy over pools; a pool is scored on its first `n` candidates
/// (all when n <= 0).
PrmAtNResult prm_at_n_on_pools(std::span<const CandidatePool> pools, const StepScorer& scorer,
                               int n = 0, SolutionScore mode = SolutionScore::Final);

PrmAtNResult prm_at_n(std::span<const Problem> problems, SolutionGenerator& generator,
                      const StepScorer& scorer, int n, std::uint64_t seed,
                      SolutionScore mode = SolutionScore::Final, std::size_t max_parallel = 1);

struct SearchResult {
  ReasoningTrace trace;
  bool terminated = false;  // generator produced its final step
  bool correct = false;     // terminated and final answer matches
};

/// Online step-level search: at step t, N next-step candidates seeded by
/// (seed, problem id, t, j) are scored as extensions of the prefix and the
/// best one (lowest j on ties) is kept. Stops at the generator's final step
/// or after max_steps (unterminated, counted incorrect).
SearchResult step_search(const Problem& problem, SolutionGenerator& generator,
                         const StepScorer& scorer, int n, int max_steps, std::uint64_t seed);

/// The same loop without a scorer, using candidate j = 0 at every step;
/// identical to step_search with n = 1.
SearchResult generate_unguided(const Problem& problem, SolutionGenerator& generator,
                               int max_steps, std::uint64_t seed);

struct StepSearchReport {
  double accuracy = 0.0;
  std::size_t problems = 0;
  std::size_t unterminated = 0;
  std::vector<ProblemRow> rows;
};

/// PRM@N-step over problems. A null scorer runs unguided generation.
StepSearchReport prm_at_n_step(std::span<const Problem> problems, SolutionGenerator& generator,
                               const StepScorer* scorer, int n, int max_steps, std::uint64_t seed,
                               std::size_t max_parallel = 1);

struct StepMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.5;
  long long tp = 0, fp = 0, fn = 0, tn = 0;
};

/// F1 from precision and recall; 0 when both are 0.
double f1_score(double precision, double recall);

/// Positive class is "step correct" (label 1); a step is predicted positive
/// when its score >= threshold. Throws ValidationError on empty or unequal input.
StepMetrics step_level_metrics(std::span<const double> scores, std::span<const int> gold,
                               double threshold = 0.5);

struct EfRbResult {
  double ef_accuracy = 0.0;
  double rb_accuracy = 0.0;
  double gap = 0.0;  // ef - rb
  std::size_t ef_count = 0;
  std::size_t rb_count = 0;
};

/// Splits records into the error-free and reflection-based sets by their gold
/// labels (incorrect solutions dropped).
void split_ef_rb(std::span<const DatasetRecord> records, std::vector<DatasetRecord>& ef,
                 std::vector<DatasetRecord>& rb);

/// A solution is predicted correct when its solution score >= threshold.
/// Both sets must be nonempty and contain only correct solutions.
EfRbResult ef_rb_accuracy(const StepScorer& scorer, std::span<const DatasetRecord> ef_set,
                          std::span<const DatasetRecord> rb_set, double threshold = 0.5,
                          SolutionScore mode = SolutionScore::Final);

struct DistStats {
  std::map<int, long long> steps_per_solution;  // K -> traces
  std::map<int, long long> tokens_per_step;     // tokens -> steps
  double mean_steps = 0.0;
  double mean_tokens_per_step = 0.0;
  double mean_reflection_tokens = 0.0;
  std::size_t traces = 0;
  long long steps = 0;
};

DistStats dataset_stats(std::span<const ReasoningTrace> traces,
                        const std::vector<std::string>& reflection_words);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

/// One-sided permutation p-value for rho <= rho_observed (negative trend).
double spearman_permutation_p(std::span<const double> x, std::span<const double> y,
                              int permutations, std::uint64_t seed);

/// One-sided sign test: P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
double sign_test_p(int wins, int losses);

struct Provenance {
  std::string scorer;
  std::string generator;
  std::uint64_t seed = 0;
  std::size_t traces = 0;
  std::size_t steps = 0;
  std::size_t skipped = 0;
};

/// Everything an evaluation run reports. Unset parts are omitted from JSON.
struct EvalReport {
  std::map<int, double> prm_at_n;
  std::map<int, double> prm_at_n_step;
  std::optional<StepMetrics> step_metrics;
  std::optional<EfRbResult> ef_rb;
  std::optional<AgreementReport> bins;
  std::optional<double> bins_spearman;
  std::optional<double> bins_spearman_p;
  std::optional<DistStats> dist_stats;
  Provenance provenance;
  std::vector<ProblemRow> rows;
};

std::string report_to_json(const EvalReport& report);
/// problem_id,chosen,correct,any_correct,skipped
std::string report_rows_csv(const EvalReport& report);
/// series,x,y rows for bins and histograms.
std::string report_plot_csv(const EvalReport& report);

}  // namespace prmkit
