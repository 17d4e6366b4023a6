#include "cli.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <sstream>

#include "prmkit/config.hpp"
#include "prmkit/dataset.hpp"
#include "prmkit/error.hpp"
#include "prmkit/eval.hpp"
#include "prmkit/generator.hpp"
#include "prmkit/http_backend.hpp"
#include "prmkit/judge.hpp"
#include "prmkit/mc.hpp"
#include "prmkit/review.hpp"
#include "prmkit/review_server.hpp"
#include "prmkit/scorer.hpp"
#include "prmkit/segmenter.hpp"
#include "prmkit/sim_world.hpp"
#include "prmkit/text.hpp"
#include "prmkit/toy_prm.hpp"

namespace prmkit::cli {

namespace {

using Json = nlohmann::ordered_json;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string backend = "sim";
};

struct Context {
  ToolkitConfig config;
  std::uint64_t seed = 0;
  std::string out;
  std::string backend;
  std::ostream* out_stream = nullptr;
  std::ostream* err_stream = nullptr;

  bool http() const { return backend == "http"; }
  /// Human-readable summaries go to stdout when the payload goes to a file.
  std::ostream& summary() const { return out.empty() ? *err_stream : *out_stream; }
};

Context make_context(const Common& common, std::ostream& out, std::ostream& err) {
  Context ctx;
  ctx.config = common.config_path.empty() ? ToolkitConfig{} : load_config(common.config_path);
  if (const char* key = std::getenv(kApiKeyEnv)) ctx.config.backend.api_key = key;
  ctx.seed = common.seed.value_or(ctx.config.sim.seed);
  ctx.config.sim.seed = ctx.seed;
  ctx.config.mc.seed = ctx.seed;
  ctx.config.train.seed = ctx.seed;
  ctx.out = common.out;
  ctx.backend = common.backend;
  ctx.out_stream = &out;
  ctx.err_stream = &err;
  ctx.config.sim.validate();
  return ctx;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ValidationError("cannot open output file " + path);
  f << text;
  if (!f) throw ValidationError("cannot write output file " + path);
}

void emit(const Context& ctx, const std::string& text) {
  if (ctx.out.empty()) {
    *ctx.out_stream << text;
  } else {
    write_text_file(ctx.out, text);
  }
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

void emit_dataset(const Context& ctx, std::span<const DatasetRecord> records) {
  std::vector<std::string> lines;
  for (const auto& r : records) lines.push_back(encode_record(r));
  emit(ctx, join_lines(lines));
}

void emit_traces(const Context& ctx, std::span<const TraceRecord> records) {
  std::vector<std::string> lines;
  for (const auto& r : records) lines.push_back(encode_trace_record(r));
  emit(ctx, join_lines(lines));
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::shared_ptr<CompletionBackend> make_http(const Context& ctx) {
  return std::make_shared<HttpBackend>(ctx.config.backend);
}

std::shared_ptr<CompletionBackend> make_judge(const Context& ctx, double judge_accuracy) {
  if (ctx.http()) return make_http(ctx);
  return std::make_shared<SimJudge>(ctx.config.sim, judge_accuracy);
}

std::shared_ptr<CompletionBackend> make_completer(const Context& ctx, double strength) {
  if (ctx.http()) return make_http(ctx);
  return std::make_shared<SimCompleter>(ctx.config.sim, strength);
}

std::shared_ptr<SolutionGenerator> make_generator(const Context& ctx, double strength) {
  if (ctx.http()) {
    return std::make_shared<LlmGenerator>(make_http(ctx), ctx.config.mc.temperature,
                                          ctx.config.mc.max_completion_tokens);
  }
  return std::make_shared<SimGenerator>(ctx.config.sim, strength);
}

/// oracle | anti-oracle | constant[:v] | toy:<model file> | judge | inverted:<spec>
std::shared_ptr<const StepScorer> make_scorer(const Context& ctx, const std::string& spec) {
  if (spec == "oracle") return std::make_shared<SimOracleScorer>();
  if (spec == "anti-oracle") return std::make_shared<InvertedScorer>(std::make_shared<SimOracleScorer>());
  if (spec == "constant") return std::make_shared<ConstantScorer>(0.5);
  if (spec.rfind("constant:", 0) == 0) {
    try {
      return std::make_shared<ConstantScorer>(std::stod(spec.substr(9)));
    } catch (const std::invalid_argument&) {
      throw ValidationError("bad constant scorer value in '" + spec + "'");
    }
  }
  if (spec.rfind("toy:", 0) == 0) {
    return std::make_shared<ToyPrmScorer>(load_model(spec.substr(4)),
                                          FeatureExtractor(ctx.config.segmentation.reflection_words));
  }
  if (spec == "judge") return std::make_shared<JudgeScorer>(make_judge(ctx, 1.0), ctx.config.annotation.retries);
  if (spec.rfind("inverted:", 0) == 0) return std::make_shared<InvertedScorer>(make_scorer(ctx, spec.substr(9)));
  throw ValidationError("unknown scorer '" + spec + "' (expected oracle, anti-oracle, constant[:v], toy:<file>, judge)");
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_n_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_csv_list(s)) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v < 1) throw ValidationError("--n expects positive integers, got '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("--n needs at least one value");
  return out;
}

void write_report(const Context& ctx, const EvalReport& report, const std::string& csv_path,
                  const std::string& plot_path) {
  emit(ctx, report_to_json(report) + "\n");
  if (!csv_path.empty()) write_text_file(csv_path, report_rows_csv(report));
  if (!plot_path.empty()) write_text_file(plot_path, report_plot_csv(report));
}

std::vector<Problem> load_or_simulate_problems(const Context& ctx, const std::string& path, std::size_t sim_count) {
  if (!path.empty()) return read_problems(path);
  if (sim_count == 0) throw ValidationError("give --problems FILE or --sim-problems N");
  return sim_problems(ctx.config.sim, sim_count);
}

std::vector<DatasetRecord> load_or_simulate_dataset(const Context& ctx, const std::string& path, std::size_t sim_count) {
  if (!path.empty()) return read_dataset(path);
  if (sim_count == 0) throw ValidationError("give --data FILE or --sim-traces N");
  return sim_dataset(ctx.config.sim, sim_count);
}

/// Prediction rows: {"problem_id", "scores": [...]} or any annotated record,
/// whose labels are taken as scores.
std::vector<std::pair<std::string, std::vector<double>>> read_predictions(const std::string& path) {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (const auto& [n, line] : read_jsonl_lines(path)) {
    const Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DatasetError(n, "<json>", "not a JSON object");
    std::string id = j.contains("problem_id") && j["problem_id"].is_string() ? j["problem_id"].get<std::string>() : "";
    const char* field = j.contains("scores") ? "scores" : "labels";
    if (!j.contains(field) || !j[field].is_array()) throw DatasetError(n, "scores", "expected an array of numbers");
    std::vector<double> scores;
    for (const auto& v : j[field]) {
      if (!v.is_number()) throw DatasetError(n, field, "expected numbers");
      scores.push_back(v.get<double>());
    }
    out.emplace_back(std::move(id), std::move(scores));
  }
  return out;
}

struct CliState {
  Common common;

  // simulate
  std::size_t sim_traces = 100;
  std::size_t sim_first = 0;
  bool sim_unannotated = false;
  bool sim_problems_only = false;
  std::optional<double> p_err, p_fix, strength;
  std::optional<int> min_ops, max_ops;

  // segment
  std::string seg_in, seg_text, seg_strategy;

  // annotate / mc-annotate
  std::string ann_in, ann_rejects;
  double judge_accuracy = 1.0;
  std::optional<int> parallel;
  std::optional<int> mc_k;
  std::optional<double> completer_strength;

  // train-toy
  std::string train_in, train_variant = "full", train_supplement;
  std::optional<double> lr, l2;
  std::optional<int> epochs, batch_size;

  // eval
  std::string problems_file, data_file, scorer_spec = "oracle", n_list, csv_path, plot_path;
  std::string solution_score = "final";
  std::size_t sim_problem_count = 0;
  std::size_t sim_trace_count = 0;
  std::optional<double> generator_strength;
  int max_steps = 256;
  bool unguided = false;
  std::string pred_file, gold_file, bins_a, bins_b, stats_in;
  double threshold = 0.5;
  int n_bins = 10;
  int permutations = 10000;

  // review
  std::string review_dataset, review_journal, review_host, review_static, review_annotator;
  std::optional<int> review_port;
};

ReviewServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

void apply_sim_overrides(Context& ctx, const CliState& s) {
  if (s.p_err) ctx.config.sim.p_err = *s.p_err;
  if (s.p_fix) ctx.config.sim.p_fix = *s.p_fix;
  if (s.strength) ctx.config.sim.strength = *s.strength;
  if (s.min_ops) ctx.config.sim.min_ops = *s.min_ops;
  if (s.max_ops) ctx.config.sim.max_ops = *s.max_ops;
  ctx.config.sim.validate();
}

int cmd_simulate(Context& ctx, const CliState& s) {
  if (s.sim_traces == 0) throw ValidationError("--traces must be >= 1");
  if (s.sim_problems_only) {
    const auto problems = sim_problems(ctx.config.sim, s.sim_traces, s.sim_first);
    std::vector<std::string> lines;
    for (const auto& p : problems) {
      Json j;
      j["problem_id"] = p.id;
      j["problem"] = p.statement;
      j["gold_answer"] = p.gold_answer;
      j["source"] = p.source_tag;
      lines.push_back(j.dump());
    }
    emit(ctx, join_lines(lines));
    return kExitOk;
  }
  const auto records = sim_dataset(ctx.config.sim, s.sim_traces, s.sim_first);
  if (s.sim_unannotated) {
    std::vector<TraceRecord> traces;
    for (const auto& r : records) traces.push_back(TraceRecord{r.problem, r.annotated.trace()});
    emit_traces(ctx, traces);
  } else {
    emit_dataset(ctx, records);
  }
  return kExitOk;
}

int cmd_segment(Context& ctx, const CliState& s) {
  auto cfg = ctx.config.segmentation;
  if (!s.seg_strategy.empty()) cfg.strategy = parse_segmentation_strategy(s.seg_strategy);
  cfg.validate();
  std::shared_ptr<CompletionBackend> judge;
  if (cfg.strategy == SegmentationStrategy::LlmAssisted) {
    judge = ctx.http() ? make_http(ctx) : std::make_shared<SimResegmenter>(cfg);
  }
  const auto run_one = [&](std::string_view text) {
    if (cfg.strategy != SegmentationStrategy::LlmAssisted) return segment(text, cfg, nullptr);
    auto result = resegment_with_llm(text, *judge, cfg);
    for (const auto& f : result.failures) *ctx.err_stream << "resegmentation " << f << "\n";
    if (result.fell_back) *ctx.err_stream << "resegmentation fell back to sentence rules\n";
    return result.steps;
  };
  if (!s.seg_text.empty()) {
    std::ifstream in(s.seg_text, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + s.seg_text);
    std::ostringstream ss;
    ss << in.rdbuf();
    Json arr = Json::array();
    for (const auto& step : run_one(ss.str())) arr.push_back(step.text);
    emit(ctx, arr.dump(2) + "\n");
    return kExitOk;
  }
  if (s.seg_in.empty()) throw ValidationError("give --in FILE (JSONL of raw solutions) or --text FILE");
  std::vector<TraceRecord> out;
  for (const auto& [n, line] : read_jsonl_lines(s.seg_in)) {
    const Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DatasetError(n, "<json>", "not a JSON object");
    const auto str = [&](const char* key, bool required) {
      if (!j.contains(key)) {
        if (required) throw DatasetError(n, key, "missing");
        return std::string();
      }
      if (!j[key].is_string()) throw DatasetError(n, key, "expected a string");
      return j[key].get<std::string>();
    };
    Problem problem;
    try {
      problem = Problem::make(str("problem_id", true), str("problem", true), str("gold_answer", true), str("source", false));
    } catch (const DatasetError&) {
      throw;
    } catch (const ValidationError& e) {
      throw DatasetError(n, "problem_id", e.what());
    }
    const std::string solution = str("solution", true);
    std::vector<Step> steps;
    try {
      steps = run_one(solution);
    } catch (const EmptyInput&) {
      throw DatasetError(n, "solution", "empty solution text");
    }
    out.push_back(TraceRecord{problem, ReasoningTrace::from_steps(problem.id, std::move(steps), str("generator", false))});
  }
  emit_traces(ctx, out);
  return kExitOk;
}

int cmd_annotate(Context& ctx, const CliState& s) {
  if (s.ann_in.empty()) throw ValidationError("--in FILE is required");
  const auto traces = read_traces(s.ann_in);
  auto judge = make_judge(ctx, s.judge_accuracy);
  const int parallel = s.parallel.value_or(ctx.config.annotation_parallel);
  if (parallel < 1) throw ValidationError("--parallel must be >= 1");
  const auto batch = annotate_dataset(traces, *judge, ctx.config.annotation, static_cast<std::size_t>(parallel));
  emit_dataset(ctx, batch.annotated);
  std::string rejects = s.ann_rejects;
  if (rejects.empty() && !ctx.out.empty()) rejects = ctx.out + ".rejects.jsonl";
  if (!rejects.empty()) write_rejects(batch.rejects, rejects);
  ctx.summary() << "annotated " << batch.annotated.size() << " traces with " << judge->id() << ", "
                << batch.rejects.size() << " rejected\n";
  return kExitOk;
}

int cmd_mc_annotate(Context& ctx, const CliState& s) {
  if (s.ann_in.empty()) throw ValidationError("--in FILE is required");
  const auto traces = read_traces(s.ann_in);
  auto mc = ctx.config.mc;
  if (s.mc_k) mc.k = *s.mc_k;
  if (s.parallel) mc.max_parallel = *s.parallel;
  mc.validate();
  auto completer = make_completer(ctx, s.completer_strength.value_or(ctx.config.sim.strength));
  std::vector<DatasetRecord> out;
  McStats stats;
  for (const auto& t : traces) {
    McStats one;
    out.push_back(DatasetRecord{t.problem, mc_annotate_trace(t.problem, t.trace, *completer, mc, &one)});
    stats += one;
  }
  emit_dataset(ctx, out);
  ctx.summary() << "mc-annotated " << out.size() << " traces with " << completer->id() << ": rollouts "
                << stats.rollouts << ", token cost " << stats.token_cost << ", failed rollouts "
                << stats.failed_rollouts << "\n";
  return kExitOk;
}

int cmd_train(Context& ctx, const CliState& s) {
  if (s.train_in.empty()) throw ValidationError("--in FILE is required");
  auto data = read_dataset(s.train_in);
  if (s.train_variant == "fe") {
    data = truncate_at_first_error(data);
  } else if (s.train_variant == "fes") {
    if (s.train_supplement.empty()) throw ValidationError("--variant fes needs --supplement FILE");
    const auto supplement = read_dataset(s.train_supplement);
    data = truncate_fes(data, supplement);
  } else if (s.train_variant != "full") {
    throw ValidationError("--variant must be full, fe or fes");
  }
  auto cfg = ctx.config.train;
  if (s.lr) cfg.learning_rate = *s.lr;
  if (s.epochs) cfg.epochs = *s.epochs;
  if (s.batch_size) cfg.batch_size = *s.batch_size;
  if (s.l2) cfg.l2 = *s.l2;
  cfg.validate();
  const auto result = train(data, cfg, FeatureExtractor(ctx.config.segmentation.reflection_words));
  emit(ctx, format_model(result.model));
  const auto& r = result.report;
  ctx.summary() << "trained on " << data.size() << " traces, " << r.examples << " steps (" << r.positives
                << " positive, " << r.negatives << " negative), final loss "
                << fixed(r.loss_curve.empty() ? 0.0 : r.loss_curve.back(), 6) << "\n";
  if (r.degenerate_class_balance) *ctx.err_stream << "warning: training data has a single label class\n";
  return kExitOk;
}

int cmd_eval_bon(Context& ctx, const CliState& s) {
  const auto problems = load_or_simulate_problems(ctx, s.problems_file, s.sim_problem_count);
  const auto ns = parse_n_list(s.n_list.empty() ? "1,8,64" : s.n_list);
  const int max_n = *std::max_element(ns.begin(), ns.end());
  auto generator = make_generator(ctx, s.generator_strength.value_or(ctx.config.sim.strength));
  auto scorer = make_scorer(ctx, s.scorer_spec);
  const auto mode = parse_solution_score(s.solution_score);
  const auto parallel = static_cast<std::size_t>(s.parallel.value_or(1));
  const auto pools = sample_pools(problems, *generator, max_n, ctx.seed, parallel);
  EvalReport report;
  for (int n : ns) {
    const auto res = prm_at_n_on_pools(pools, *scorer, n, mode);
    report.prm_at_n[n] = res.accuracy;
    if (n == max_n) {
      report.rows = res.rows;
      report.provenance.skipped = res.skipped;
    }
    ctx.summary() << "PRM@" << n << " " << fixed(res.accuracy) << " (pass@" << n << " " << fixed(res.pass_at_n)
                  << ")\n";
  }
  report.provenance.scorer = scorer->id();
  report.provenance.generator = generator->id();
  report.provenance.seed = ctx.seed;
  for (const auto& p : pools) {
    report.provenance.traces += p.candidates.size();
    for (const auto& c : p.candidates) report.provenance.steps += c.size();
  }
  write_report(ctx, report, s.csv_path, s.plot_path);
  return kExitOk;
}

int cmd_eval_step_search(Context& ctx, const CliState& s) {
  const auto problems = load_or_simulate_problems(ctx, s.problems_file, s.sim_problem_count);
  const auto ns = parse_n_list(s.n_list.empty() ? "8" : s.n_list);
  auto generator = make_generator(ctx, s.generator_strength.value_or(ctx.config.sim.strength));
  std::shared_ptr<const StepScorer> scorer;
  if (!s.unguided) scorer = make_scorer(ctx, s.scorer_spec);
  if (s.max_steps < 1) throw ValidationError("--max-steps must be >= 1");
  const auto parallel = static_cast<std::size_t>(s.parallel.value_or(1));
  EvalReport report;
  for (int n : ns) {
    const auto res = prm_at_n_step(problems, *generator, scorer.get(), n, s.max_steps, ctx.seed, parallel);
    report.prm_at_n_step[n] = res.accuracy;
    report.rows = res.rows;
    report.provenance.skipped = res.unterminated;
    ctx.summary() << "PRM@" << n << "-step " << fixed(res.accuracy) << " (" << res.unterminated
                  << " unterminated)\n";
  }
  report.provenance.scorer = scorer ? scorer->id() : "unguided";
  report.provenance.generator = generator->id();
  report.provenance.seed = ctx.seed;
  report.provenance.traces = problems.size();
  write_report(ctx, report, s.csv_path, s.plot_path);
  return kExitOk;
}

int cmd_eval_step_level(Context& ctx, const CliState& s) {
  if (s.gold_file.empty()) throw ValidationError("--gold FILE is required");
  const auto gold = read_dataset(s.gold_file);
  std::vector<double> scores;
  std::vector<int> labels;
  std::string scorer_id;
  if (!s.pred_file.empty()) {
    const auto pred = read_predictions(s.pred_file);
    if (pred.size() != gold.size()) {
      throw ValidationError("--pred has " + std::to_string(pred.size()) + " rows but --gold has " +
                            std::to_string(gold.size()));
    }
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const auto& [id, ps] = pred[i];
      if (!id.empty() && id != gold[i].problem.id) {
        throw ValidationError("row " + std::to_string(i + 1) + ": prediction for '" + id + "' but gold is '" +
                              gold[i].problem.id + "'");
      }
      const auto gl = gold[i].annotated.labels();
      if (ps.size() != gl.size()) {
        throw ValidationError("row " + std::to_string(i + 1) + ": " + std::to_string(ps.size()) +
                              " scores for " + std::to_string(gl.size()) + " steps");
      }
      scores.insert(scores.end(), ps.begin(), ps.end());
      labels.insert(labels.end(), gl.begin(), gl.end());
    }
    scorer_id = "file:" + s.pred_file;
  } else {
    auto scorer = make_scorer(ctx, s.scorer_spec);
    for (const auto& r : gold) {
      const auto ps = scorer->score_steps(r.problem, r.annotated.trace());
      const auto gl = r.annotated.labels();
      scores.insert(scores.end(), ps.begin(), ps.end());
      labels.insert(labels.end(), gl.begin(), gl.end());
    }
    scorer_id = scorer->id();
  }
  const auto m = step_level_metrics(scores, labels, s.threshold);
  EvalReport report;
  report.step_metrics = m;
  report.provenance.scorer = scorer_id;
  report.provenance.seed = ctx.seed;
  report.provenance.traces = gold.size();
  report.provenance.steps = labels.size();
  write_report(ctx, report, s.csv_path, s.plot_path);
  ctx.summary() << "precision " << fixed(m.precision) << " recall " << fixed(m.recall) << " F1 " << fixed(m.f1)
                << "\n";
  return kExitOk;
}

int cmd_eval_ef_rb(Context& ctx, const CliState& s) {
  const auto data = load_or_simulate_dataset(ctx, s.data_file, s.sim_trace_count);
  std::vector<DatasetRecord> ef, rb;
  split_ef_rb(data, ef, rb);
  auto scorer = make_scorer(ctx, s.scorer_spec);
  const auto res = ef_rb_accuracy(*scorer, ef, rb, s.threshold, parse_solution_score(s.solution_score));
  EvalReport report;
  report.ef_rb = res;
  report.provenance.scorer = scorer->id();
  report.provenance.seed = ctx.seed;
  report.provenance.traces = ef.size() + rb.size();
  write_report(ctx, report, s.csv_path, s.plot_path);
  ctx.summary() << "EF " << fixed(res.ef_accuracy) << " (" << res.ef_count << ") RB " << fixed(res.rb_accuracy)
                << " (" << res.rb_count << ") gap " << fixed(res.gap) << "\n";
  return kExitOk;
}

int cmd_eval_bins(Context& ctx, const CliState& s) {
  if (s.bins_a.empty() || s.bins_b.empty()) throw ValidationError("--a FILE and --b FILE are required");
  const auto a = annotated_traces(read_dataset(s.bins_a));
  const auto b = annotated_traces(read_dataset(s.bins_b));
  const auto rep = agreement_by_bins(a, b, s.n_bins);
  std::vector<double> x, y;
  for (const auto& bin : rep.bins) {
    x.push_back(bin.bin);
    y.push_back(bin.agreement);
  }
  EvalReport report;
  report.bins = rep;
  if (x.size() >= 2) {
    report.bins_spearman = spearman(x, y);
    report.bins_spearman_p = spearman_permutation_p(x, y, s.permutations, ctx.seed);
  }
  report.provenance.scorer = a.empty() ? "" : a.front().annotator();
  report.provenance.generator = b.empty() ? "" : b.front().annotator();
  report.provenance.seed = ctx.seed;
  report.provenance.traces = a.size();
  write_report(ctx, report, s.csv_path, s.plot_path);
  ctx.summary() << "overall agreement " << fixed(rep.overall);
  if (report.bins_spearman) {
    ctx.summary() << ", spearman " << fixed(*report.bins_spearman) << " (p " << fixed(*report.bins_spearman_p, 4)
                  << ")";
  }
  ctx.summary() << "\n";
  return kExitOk;
}

int cmd_eval_stats(Context& ctx, const CliState& s) {
  std::vector<ReasoningTrace> traces;
  if (!s.stats_in.empty()) {
    for (const auto& t : read_traces(s.stats_in)) traces.push_back(t.trace);
  } else if (s.sim_trace_count > 0) {
    for (const auto& r : sim_dataset(ctx.config.sim, s.sim_trace_count)) traces.push_back(r.annotated.trace());
  } else {
    throw ValidationError("give --in FILE or --sim-traces N");
  }
  const auto stats = dataset_stats(traces, ctx.config.segmentation.reflection_words);
  EvalReport report;
  report.dist_stats = stats;
  report.provenance.seed = ctx.seed;
  report.provenance.traces = stats.traces;
  report.provenance.steps = static_cast<std::size_t>(stats.steps);
  write_report(ctx, report, s.csv_path, s.plot_path);
  ctx.summary() << "traces " << stats.traces << ", mean steps " << fixed(stats.mean_steps, 2)
                << ", mean tokens per step " << fixed(stats.mean_tokens_per_step, 2)
                << ", mean reflection tokens " << fixed(stats.mean_reflection_tokens, 2) << "\n";
  return kExitOk;
}

int cmd_review_serve(Context& ctx, const CliState& s) {
  const std::string dataset = s.review_dataset.empty() ? ctx.config.review.dataset : s.review_dataset;
  if (dataset.empty()) throw ValidationError("--dataset FILE is required (or [review] dataset)");
  const std::string journal = s.review_journal.empty() ? ctx.config.review.journal : s.review_journal;
  const std::string host = s.review_host.empty() ? ctx.config.review.host : s.review_host;
  const int port = s.review_port.value_or(ctx.config.review.port);
  ReviewService service(read_dataset(dataset), journal);
  ReviewServer server(service, s.review_static);
  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
    if (bound < 0) throw ValidationError("cannot bind " + host);
  } else if (!server.bind(host, port)) {
    throw ValidationError("cannot bind " + host + ":" + std::to_string(port));
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  *ctx.err_stream << "review service on http://" << host << ":" << bound << " (" << service.tasks().size()
                  << " tasks, journal " << journal << ")" << std::endl;
  server.listen_after_bind();
  g_server = nullptr;
  return kExitOk;
}

int cmd_review_accuracy(Context& ctx, const CliState& s) {
  const std::string journal = s.review_journal.empty() ? ctx.config.review.journal : s.review_journal;
  if (!std::filesystem::exists(journal)) throw ValidationError("journal not found: " + journal);
  const auto records = read_journal(journal);
  std::vector<std::string> annotators;
  if (!s.review_annotator.empty()) {
    annotators.push_back(s.review_annotator);
  } else {
    for (const auto& r : records) {
      if (std::find(annotators.begin(), annotators.end(), r.annotator) == annotators.end()) annotators.push_back(r.annotator);
    }
  }
  Json list = Json::array();
  for (const auto& a : annotators) {
    const auto rep = accuracy_report(records, a);
    Json j;
    j["annotator"] = a;
    j["accuracy"] = rep.aggregate.accuracy ? Json(*rep.aggregate.accuracy) : Json(nullptr);
    j["accepted"] = rep.aggregate.accepted;
    j["rejected"] = rep.aggregate.rejected;
    Json rows = Json::array();
    for (const auto& r : rep.per_reviewer) {
      rows.push_back(Json{{"reviewer", r.reviewer},
                          {"accepted", r.accepted},
                          {"rejected", r.rejected},
                          {"accuracy", r.accuracy ? Json(*r.accuracy) : Json(nullptr)}});
    }
    j["per_reviewer"] = rows;
    list.push_back(j);
    ctx.summary() << a << ": " << (rep.aggregate.accuracy ? fixed(*rep.aggregate.accuracy) : "no data") << " ("
                  << rep.aggregate.accepted << "/" << rep.aggregate.accepted + rep.aggregate.rejected << ")\n";
  }
  emit(ctx, list.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CliState s;
  CLI::App app{"prmkit: process reward model data pipeline and evaluation harness", "prmkit"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");
  app.add_option("--config", s.common.config_path, "TOML config file")->check(CLI::ExistingFile);
  app.add_option("--seed", s.common.seed, "Seed for every random choice (default: [sim] seed or 0)");
  app.add_option("--out", s.common.out, "Output file (default: stdout)");
  app.add_option("--backend", s.common.backend, "Completion backend")
      ->check(CLI::IsMember({"sim", "http"}))
      ->capture_default_str();

  const auto add_sim_opts = [&](CLI::App* cmd) {
    cmd->add_option("--p-err", s.p_err, "Per-operation slip probability");
    cmd->add_option("--p-fix", s.p_fix, "Per-step self-correction probability");
    cmd->add_option("--strength", s.strength, "Default solver strength");
    cmd->add_option("--min-ops", s.min_ops, "Fewest operations per problem");
    cmd->add_option("--max-ops", s.max_ops, "Most operations per problem");
  };
  const auto add_report_opts = [&](CLI::App* cmd) {
    cmd->add_option("--csv", s.csv_path, "Per-problem rows as CSV");
    cmd->add_option("--emit-plot-data", s.plot_path, "Bin and histogram series as CSV");
  };

  auto* simulate = app.add_subcommand("simulate", "Emit a simulated-world dataset with gold labels");
  simulate->add_option("--traces", s.sim_traces, "Number of problems / traces")->capture_default_str();
  simulate->add_option("--first", s.sim_first, "Index of the first problem")->capture_default_str();
  simulate->add_flag("--unannotated", s.sim_unannotated, "Write traces without labels");
  simulate->add_flag("--problems-only", s.sim_problems_only, "Write problems only");
  add_sim_opts(simulate);

  auto* seg = app.add_subcommand("segment", "Split raw solutions into steps");
  seg->add_option("--in", s.seg_in, "JSONL of {problem_id, problem, gold_answer, solution, source?, generator?}");
  seg->add_option("--text", s.seg_text, "Segment one plain-text file and print the steps as JSON");
  seg->add_option("--strategy", s.seg_strategy, "sdn | srw | llm (default from config)");

  auto* ann = app.add_subcommand("annotate", "Label steps with an LLM judge");
  ann->add_option("--in", s.ann_in, "Trace JSONL")->required();
  ann->add_option("--rejects", s.ann_rejects, "Rejects JSONL (default: <out>.rejects.jsonl)");
  ann->add_option("--judge-accuracy", s.judge_accuracy, "Simulated judge accuracy")->capture_default_str();
  ann->add_option("--parallel", s.parallel, "Concurrent judge calls");
  add_sim_opts(ann);

  auto* mc = app.add_subcommand("mc-annotate", "Label steps by Monte-Carlo rollouts");
  mc->add_option("--in", s.ann_in, "Trace JSONL")->required();
  mc->add_option("--k", s.mc_k, "Rollouts per step");
  mc->add_option("--completer-strength", s.completer_strength, "Simulated completer strength");
  mc->add_option("--parallel", s.parallel, "Concurrent rollouts");
  add_sim_opts(mc);

  auto* tr = app.add_subcommand("train-toy", "Train the feature-based toy PRM");
  tr->add_option("--in", s.train_in, "Annotated dataset JSONL")->required();
  tr->add_option("--variant", s.train_variant, "full | fe | fes")->capture_default_str();
  tr->add_option("--supplement", s.train_supplement, "Extra dataset for the fes variant");
  tr->add_option("--lr", s.lr, "Learning rate");
  tr->add_option("--epochs", s.epochs, "Epochs");
  tr->add_option("--batch-size", s.batch_size, "Mini-batch size");
  tr->add_option("--l2", s.l2, "L2 penalty");

  auto* ev = app.add_subcommand("eval", "Evaluation protocols");
  ev->require_subcommand(1);
  const std::string scorer_help = "oracle | anti-oracle | constant[:v] | toy:<model> | judge | inverted:<spec>";

  auto* bon = ev->add_subcommand("bon", "Best-of-N (PRM@N)");
  bon->add_option("--problems", s.problems_file, "Problem JSONL");
  bon->add_option("--sim-problems", s.sim_problem_count, "Use N simulated problems");
  bon->add_option("--n", s.n_list, "Comma-separated N values (default 1,8,64)");
  bon->add_option("--scorer", s.scorer_spec, scorer_help)->capture_default_str();
  bon->add_option("--generator-strength", s.generator_strength, "Simulated generator strength");
  bon->add_option("--solution-score", s.solution_score, "final | min")->capture_default_str();
  bon->add_option("--parallel", s.parallel, "Concurrent problems");
  add_sim_opts(bon);
  add_report_opts(bon);

  auto* ss = ev->add_subcommand("step-search", "Reward-guided step search (PRM@N-step)");
  ss->add_option("--problems", s.problems_file, "Problem JSONL");
  ss->add_option("--sim-problems", s.sim_problem_count, "Use N simulated problems");
  ss->add_option("--n", s.n_list, "Comma-separated N values (default 8)");
  ss->add_option("--scorer", s.scorer_spec, scorer_help)->capture_default_str();
  ss->add_flag("--unguided", s.unguided, "Generate without a scorer");
  ss->add_option("--max-steps", s.max_steps, "Step budget per problem")->capture_default_str();
  ss->add_option("--generator-strength", s.generator_strength, "Simulated generator strength");
  ss->add_option("--parallel", s.parallel, "Concurrent problems");
  add_sim_opts(ss);
  add_report_opts(ss);

  auto* sl = ev->add_subcommand("step-level", "Step classification precision, recall and F1");
  sl->add_option("--gold", s.gold_file, "Gold annotated dataset JSONL")->required();
  sl->add_option("--pred", s.pred_file, "Predictions JSONL ({problem_id, scores} or annotated records)");
  sl->add_option("--scorer", s.scorer_spec, scorer_help + " (used without --pred)")->capture_default_str();
  sl->add_option("--threshold", s.threshold, "Positive when score >= threshold")->capture_default_str();
  add_report_opts(sl);

  auto* efrb = ev->add_subcommand("ef-rb", "Error-free vs reflection-based solution accuracy");
  efrb->add_option("--data", s.data_file, "Gold annotated dataset JSONL");
  efrb->add_option("--sim-traces", s.sim_trace_count, "Use N simulated gold traces");
  efrb->add_option("--scorer", s.scorer_spec, scorer_help)->capture_default_str();
  efrb->add_option("--threshold", s.threshold, "Solution predicted correct when score >= threshold")
      ->capture_default_str();
  efrb->add_option("--solution-score", s.solution_score, "final | min")->capture_default_str();
  add_sim_opts(efrb);
  add_report_opts(efrb);

  auto* bins = ev->add_subcommand("bins", "Label agreement by solution length");
  bins->add_option("--a", s.bins_a, "First annotated dataset")->required();
  bins->add_option("--b", s.bins_b, "Second annotated dataset (same traces)")->required();
  bins->add_option("--bins", s.n_bins, "Number of bins")->capture_default_str();
  bins->add_option("--permutations", s.permutations, "Permutations for the trend p-value")->capture_default_str();
  add_report_opts(bins);

  auto* st = ev->add_subcommand("stats", "Step-count, step-length and reflection-token statistics");
  st->add_option("--in", s.stats_in, "Trace or dataset JSONL");
  st->add_option("--sim-traces", s.sim_trace_count, "Use N simulated traces");
  add_sim_opts(st);
  add_report_opts(st);

  auto* rv = app.add_subcommand("review", "Human review of LLM step labels");
  rv->require_subcommand(1);
  auto* serve = rv->add_subcommand("serve", "Serve the review API (and an optional static UI)");
  serve->add_option("--dataset", s.review_dataset, "Annotated dataset JSONL");
  serve->add_option("--journal", s.review_journal, "Verdict journal JSONL");
  serve->add_option("--host", s.review_host, "Bind address (default 127.0.0.1)");
  serve->add_option("--port", s.review_port, "Port (0 picks a free one)");
  serve->add_option("--static", s.review_static, "Directory with the UI bundle");
  auto* racc = rv->add_subcommand("accuracy", "Annotation accuracy from a verdict journal");
  racc->add_option("--journal", s.review_journal, "Verdict journal JSONL");
  racc->add_option("--annotator", s.review_annotator, "Only this annotator");

  std::vector<const char*> cargv;
  for (const auto& a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front(); sub;
         sub = sub->get_subcommands().empty() ? nullptr : sub->get_subcommands().front()) {
      failing = sub;
    }
    err << failing->help();
    return kExitValidation;
  }

  try {
    Context ctx = make_context(s.common, out, err);
    apply_sim_overrides(ctx, s);
    if (*simulate) return cmd_simulate(ctx, s);
    if (*seg) return cmd_segment(ctx, s);
    if (*ann) return cmd_annotate(ctx, s);
    if (*mc) return cmd_mc_annotate(ctx, s);
    if (*tr) return cmd_train(ctx, s);
    if (*bon) return cmd_eval_bon(ctx, s);
    if (*ss) return cmd_eval_step_search(ctx, s);
    if (*sl) return cmd_eval_step_level(ctx, s);
    if (*efrb) return cmd_eval_ef_rb(ctx, s);
    if (*bins) return cmd_eval_bins(ctx, s);
    if (*st) return cmd_eval_stats(ctx, s);
    if (*serve) return cmd_review_serve(ctx, s);
    if (*racc) return cmd_review_accuracy(ctx, s);
    err << app.help();
    return kExitValidation;
  } catch (const BackendError& e) {
    err << "backend error";
    if (!e.endpoint().empty()) err << " (endpoint " << e.endpoint() << ")";
    err << ": " << e.what() << "\n";
    return kExitBackend;
  } catch (const AnnotationFailed& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace prmkit::cli
