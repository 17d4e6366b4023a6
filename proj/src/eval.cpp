#include "prmkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "prmkit/answer.hpp"
#include "prmkit/error.hpp"
#include "prmkit/parallel.hpp"
#include "prmkit/rng.hpp"
#include "prmkit/text.hpp"

namespace prmkit {

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

SearchResult search_loop(const Problem& problem, SolutionGenerator& generator, const StepScorer* scorer, int n,
                         int max_steps, std::uint64_t seed) {
  if (n < 1) throw ValidationError("N must be >= 1");
  if (max_steps < 1) throw ValidationError("max_steps must be >= 1");
  std::vector<Step> steps;
  bool terminated = false;
  for (int t = 0; t < max_steps && !terminated; ++t) {
    const int width = scorer ? n : 1;
    StepProposal best;
    double best_score = -1.0;
    for (int j = 0; j < width; ++j) {
      StepProposal p = generator.next_step(problem, steps, derive_seed(seed, problem.id, t, j));
      if (trim_view(p.text).empty()) throw ValidationError("generator proposed an empty step for " + problem.id);
      if (width == 1) {
        best = std::move(p);
        break;
      }
      std::vector<Step> extended = steps;
      extended.push_back(Step{static_cast<int>(extended.size()), p.text, std::max(1, count_tokens(p.text))});
      const ReasoningTrace candidate = ReasoningTrace::from_steps(problem.id, std::move(extended), generator.id());
      const double s = scorer->score_steps(problem, candidate).back();
      if (s > best_score) {
        best_score = s;
        best = std::move(p);
      }
    }
    steps.push_back(Step{static_cast<int>(steps.size()), best.text, std::max(1, count_tokens(best.text))});
    terminated = best.is_final;
  }
  SearchResult r;
  r.trace = ReasoningTrace::from_steps(problem.id, std::move(steps), generator.id());
  r.terminated = terminated;
  r.correct = terminated && trace_correct(problem, r.trace);
  return r;
}

nlohmann::ordered_json metrics_json(const StepMetrics& m) {
  nlohmann::ordered_json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["threshold"] = m.threshold;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["fn"] = m.fn;
  j["tn"] = m.tn;
  return j;
}

nlohmann::ordered_json histogram_json(const std::map<int, long long>& h) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : h) j[std::to_string(k)] = v;
  return j;
}

}  // namespace

SolutionScore parse_solution_score(std::string_view name) {
  const std::string n = to_lower(trim_view(name));
  if (n == "final") return SolutionScore::Final;
  if (n == "min") return SolutionScore::Min;
  throw ValidationError("unknown solution score '" + std::string(name) + "' (expected final or min)");
}

double solution_score(std::span<const double> step_scores, SolutionScore mode) {
  if (step_scores.empty()) throw ValidationError("no step scores");
  if (mode == SolutionScore::Min) return *std::min_element(step_scores.begin(), step_scores.end());
  return step_scores.back();
}

std::size_t best_of_n(std::span<const std::vector<double>> candidate_scores, SolutionScore mode) {
  if (candidate_scores.empty()) throw ValidationError("best_of_n needs at least one candidate");
  std::size_t best = 0;
  double best_score = solution_score(candidate_scores[0], mode);
  for (std::size_t i = 1; i < candidate_scores.size(); ++i) {
    const double s = solution_score(candidate_scores[i], mode);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

std::vector<CandidatePool> sample_pools(std::span<const Problem> problems, SolutionGenerator& generator, int n,
                                        std::uint64_t seed, std::size_t max_parallel) {
  if (n < 1) throw ValidationError("N must be >= 1");
  std::vector<CandidatePool> pools(problems.size());
  parallel_for(problems.size(), max_parallel, [&](std::size_t p) {
    CandidatePool& pool = pools[p];
    pool.problem = problems[p];
    try {
      for (int i = 0; i < n; ++i) {
        pool.candidates.push_back(generator.sample_trace(problems[p], derive_seed(seed, problems[p].id, i)));
      }
    } catch (const ValidationError& e) {
      pool.candidates.clear();
      pool.generator_failed = true;
      pool.error = e.what();
    }
  });
  return pools;
}

bool trace_correct(const Problem& problem, const ReasoningTrace& trace) {
  return trace.final_answer.has_value() && answers_match(*trace.final_answer, problem.gold_answer);
}

PrmAtNResult prm_at_n_on_pools(std::span<const CandidatePool> pools, const StepScorer& scorer, int n, SolutionScore mode) {
  PrmAtNResult result;
  result.problems = pools.size();
  std::size_t scored = 0, correct = 0, any = 0;
  for (const auto& pool : pools) {
    ProblemRow row;
    row.problem_id = pool.problem.id;
    const std::size_t take = n <= 0 ? pool.candidates.size() : std::min<std::size_t>(pool.candidates.size(), static_cast<std::size_t>(n));
    if (pool.generator_failed || take == 0) {
      row.skipped = true;
      ++result.skipped;
      result.rows.push_back(row);
      continue;
    }
    std::vector<std::vector<double>> scores;
    for (std::size_t i = 0; i < take; ++i) {
      scores.push_back(scorer.score_steps(pool.problem, pool.candidates[i]));
      row.any_correct = row.any_correct || trace_correct(pool.problem, pool.candidates[i]);
    }
    row.chosen = static_cast<int>(best_of_n(scores, mode));
    row.correct = trace_correct(pool.problem, pool.candidates[static_cast<std::size_t>(row.chosen)]);
    ++scored;
    correct += row.correct ? 1 : 0;
    any += row.any_correct ? 1 : 0;
    result.n = std::max(result.n, static_cast<int>(take));
    result.rows.push_back(row);
  }
  if (scored) {
    result.accuracy = static_cast<double>(correct) / static_cast<double>(scored);
    result.pass_at_n = static_cast<double>(any) / static_cast<double>(scored);
  }
  if (n > 0) result.n = n;
  return result;
}

PrmAtNResult prm_at_n(std::span<const Problem> problems, SolutionGenerator& generator, const StepScorer& scorer, int n,
                      std::uint64_t seed, SolutionScore mode, std::size_t max_parallel) {
  const auto pools = sample_pools(problems, generator, n, seed, max_parallel);
  return prm_at_n_on_pools(pools, scorer, n, mode);
}

SearchResult step_search(const Problem& problem, SolutionGenerator& generator, const StepScorer& scorer, int n,
                         int max_steps, std::uint64_t seed) {
  return search_loop(problem, generator, n == 1 ? nullptr : &scorer, n, max_steps, seed);
}

SearchResult generate_unguided(const Problem& problem, SolutionGenerator& generator, int max_steps, std::uint64_t seed) {
  return search_loop(problem, generator, nullptr, 1, max_steps, seed);
}

StepSearchReport prm_at_n_step(std::span<const Problem> problems, SolutionGenerator& generator, const StepScorer* scorer,
                               int n, int max_steps, std::uint64_t seed, std::size_t max_parallel) {
  std::vector<SearchResult> results(problems.size());
  parallel_for(problems.size(), max_parallel, [&](std::size_t i) {
    results[i] = scorer ? step_search(problems[i], generator, *scorer, n, max_steps, seed)
                        : generate_unguided(problems[i], generator, max_steps, seed);
  });
  StepSearchReport report;
  report.problems = problems.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    ProblemRow row;
    row.problem_id = problems[i].id;
    row.correct = results[i].correct;
    row.any_correct = results[i].correct;
    correct += row.correct ? 1 : 0;
    report.unterminated += results[i].terminated ? 0 : 1;
    report.rows.push_back(row);
  }
  if (!problems.empty()) report.accuracy = static_cast<double>(correct) / static_cast<double>(problems.size());
  return report;
}

double f1_score(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

StepMetrics step_level_metrics(std::span<const double> scores, std::span<const int> gold, double threshold) {
  if (scores.empty()) throw ValidationError("step_level_metrics: empty input");
  if (scores.size() != gold.size()) {
    throw ValidationError("step_level_metrics: " + std::to_string(scores.size()) + " scores vs " + std::to_string(gold.size()) + " labels");
  }
  StepMetrics m;
  m.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (gold[i] != 0 && gold[i] != 1) throw ValidationError("gold labels must be 0 or 1");
    const bool pred = scores[i] >= threshold;
    if (pred && gold[i] == 1) ++m.tp;
    if (pred && gold[i] == 0) ++m.fp;
    if (!pred && gold[i] == 1) ++m.fn;
    if (!pred && gold[i] == 0) ++m.tn;
  }
  m.precision = m.tp + m.fp ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
  m.recall = m.tp + m.fn ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

void split_ef_rb(std::span<const DatasetRecord> records, std::vector<DatasetRecord>& ef, std::vector<DatasetRecord>& rb) {
  for (const auto& r : records) {
    switch (classify_solution(r.annotated)) {
      case SolutionClass::ErrorFree: ef.push_back(r); break;
      case SolutionClass::ReflectionBased: rb.push_back(r); break;
      case SolutionClass::Incorrect: break;
    }
  }
}

EfRbResult ef_rb_accuracy(const StepScorer& scorer, std::span<const DatasetRecord> ef_set,
                          std::span<const DatasetRecord> rb_set, double threshold, SolutionScore mode) {
  if (ef_set.empty()) throw ValidationError("error-free set is empty");
  if (rb_set.empty()) throw ValidationError("reflection-based set is empty");
  const auto accuracy = [&](std::span<const DatasetRecord> set, const char* name) {
    std::size_t hit = 0;
    for (const auto& r : set) {
      if (!r.annotated.solution_correct()) {
        throw ValidationError(std::string(name) + " set contains an incorrect solution (" + r.problem.id + ")");
      }
      const auto scores = scorer.score_steps(r.problem, r.annotated.trace());
      hit += solution_score(scores, mode) >= threshold ? 1 : 0;
    }
    return static_cast<double>(hit) / static_cast<double>(set.size());
  };
  EfRbResult out;
  out.ef_accuracy = accuracy(ef_set, "error-free");
  out.rb_accuracy = accuracy(rb_set, "reflection-based");
  out.gap = out.ef_accuracy - out.rb_accuracy;
  out.ef_count = ef_set.size();
  out.rb_count = rb_set.size();
  return out;
}

DistStats dataset_stats(std::span<const ReasoningTrace> traces, const std::vector<std::string>& reflection_words) {
  if (traces.empty()) throw ValidationError("dataset_stats: no traces");
  DistStats d;
  long long tokens = 0;
  long long reflections = 0;
  for (const auto& t : traces) {
    ++d.steps_per_solution[static_cast<int>(t.size())];
    for (const auto& s : t.steps) {
      ++d.tokens_per_step[s.token_count];
      tokens += s.token_count;
      for (const auto& w : reflection_words) reflections += count_phrase(s.text, w);
    }
    d.steps += static_cast<long long>(t.size());
  }
  d.traces = traces.size();
  d.mean_steps = static_cast<double>(d.steps) / static_cast<double>(d.traces);
  d.mean_tokens_per_step = static_cast<double>(tokens) / static_cast<double>(d.steps);
  d.mean_reflection_tokens = static_cast<double>(reflections) / static_cast<double>(d.traces);
  return d;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("spearman needs two equal-length series of >= 2 values");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double spearman_permutation_p(std::span<const double> x, std::span<const double> y, int permutations, std::uint64_t seed) {
  if (permutations < 1) throw ValidationError("permutations must be >= 1");
  const double observed = spearman(x, y);
  const auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  Rng rng(seed);
  int at_most = 0;
  for (int i = 0; i < permutations; ++i) {
    rng.shuffle(std::span(ry));
    if (pearson(rx, ry) <= observed + 1e-12) ++at_most;
  }
  return (at_most + 1.0) / (permutations + 1.0);
}

double sign_test_p(int wins, int losses) {
  if (wins < 0 || losses < 0) throw ValidationError("sign test counts must be >= 0");
  const int n = wins + losses;
  if (n == 0) return 1.0;
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  }
  return std::min(1.0, p);
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  if (!report.prm_at_n.empty()) {
    nlohmann::ordered_json m;
    for (const auto& [n, acc] : report.prm_at_n) m[std::to_string(n)] = acc;
    j["prm_at_n"] = m;
  }
  if (!report.prm_at_n_step.empty()) {
    nlohmann::ordered_json m;
    for (const auto& [n, acc] : report.prm_at_n_step) m[std::to_string(n)] = acc;
    j["prm_at_n_step"] = m;
  }
  if (report.step_metrics) j["step_metrics"] = metrics_json(*report.step_metrics);
  if (report.ef_rb) {
    nlohmann::ordered_json e;
    e["ef_accuracy"] = report.ef_rb->ef_accuracy;
    e["rb_accuracy"] = report.ef_rb->rb_accuracy;
    e["gap"] = report.ef_rb->gap;
    e["ef_count"] = report.ef_rb->ef_count;
    e["rb_count"] = report.ef_rb->rb_count;
    j["ef_rb"] = e;
  }
  if (report.bins) {
    nlohmann::ordered_json bins = nlohmann::ordered_json::array();
    for (const auto& b : report.bins->bins) {
      nlohmann::ordered_json row;
      row["bin"] = b.bin;
      row["min_steps"] = b.min_steps;
      row["max_steps"] = b.max_steps;
      row["traces"] = b.traces;
      row["steps"] = b.steps;
      row["agreement"] = b.agreement;
      bins.push_back(row);
    }
    nlohmann::ordered_json section;
    section["bins"] = bins;
    section["overall"] = report.bins->overall;
    if (report.bins_spearman) section["spearman"] = *report.bins_spearman;
    if (report.bins_spearman_p) section["spearman_p"] = *report.bins_spearman_p;
    j["bins"] = section;
  }
  if (report.dist_stats) {
    const auto& d = *report.dist_stats;
    nlohmann::ordered_json s;
    s["traces"] = d.traces;
    s["steps"] = d.steps;
    s["mean_steps"] = d.mean_steps;
    s["mean_tokens_per_step"] = d.mean_tokens_per_step;
    s["mean_reflection_tokens"] = d.mean_reflection_tokens;
    s["steps_per_solution"] = histogram_json(d.steps_per_solution);
    s["tokens_per_step"] = histogram_json(d.tokens_per_step);
    j["dist_stats"] = s;
  }
  nlohmann::ordered_json p;
  p["scorer"] = report.provenance.scorer;
  p["generator"] = report.provenance.generator;
  p["seed"] = report.provenance.seed;
  p["traces"] = report.provenance.traces;
  p["steps"] = report.provenance.steps;
  p["skipped"] = report.provenance.skipped;
  j["provenance"] = p;
  return j.dump(2) + "\n";
}

std::string report_rows_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "problem_id,chosen,correct,any_correct,skipped\n";
  for (const auto& r : report.rows) {
    out << r.problem_id << ',' << r.chosen << ',' << (r.correct ? 1 : 0) << ',' << (r.any_correct ? 1 : 0) << ','
        << (r.skipped ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string report_plot_csv(const EvalReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "series,x,y\n";
  if (report.bins) {
    for (const auto& b : report.bins->bins) out << "bin_agreement," << b.bin << ',' << b.agreement << '\n';
  }
  if (report.dist_stats) {
    for (const auto& [k, v] : report.dist_stats->steps_per_solution) out << "steps_per_solution," << k << ',' << v << '\n';
    for (const auto& [k, v] : report.dist_stats->tokens_per_step) out << "tokens_per_step," << k << ',' << v << '\n';
  }
  return out.str();
}

}  // namespace prmkit
