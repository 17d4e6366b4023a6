#include "prmkit/sim_world.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "prmkit/answer.hpp"
#include "prmkit/error.hpp"
#include "prmkit/label_automaton.hpp"
#include "prmkit/text.hpp"

namespace prmkit {

namespace {

constexpr std::string_view kStatementHead = "Start with ";
constexpr std::string_view kStatementOps = ". Apply these operations in order: ";
constexpr std::string_view kStatementTail = ". What is the final value?";
constexpr std::string_view kIntroHead = "We start with the value ";
constexpr std::string_view kRedo = "Redoing the computation from the start, the value after ";
constexpr std::string_view kFinalMarker = "Final answer: ";
constexpr std::string_view kNewApproachLead = "Alternatively, I can take a fresh approach.";
constexpr std::string_view kCorrectionLeads[] = {
    "Wait, that does not look right.",
    "Hold on, I made an error earlier.",
    "Let me check the earlier arithmetic again.",
};
constexpr std::string_view kOpLeads[] = {"Next,", "Then,", "Now,"};

std::string fmt(std::int64_t v) { return std::to_string(v); }

std::string op_phrase(const ChainOperation& op) {
  switch (op.op) {
    case ChainOp::Add: return "add " + fmt(op.operand);
    case ChainOp::Subtract: return "subtract " + fmt(op.operand);
    case ChainOp::Multiply: return "multiply by " + fmt(op.operand);
  }
  return {};
}

char op_symbol(ChainOp op) {
  switch (op) {
    case ChainOp::Add: return '+';
    case ChainOp::Subtract: return '-';
    case ChainOp::Multiply: return '*';
  }
  return '+';
}

// Parses a signed integer at the front of `s`, advancing it.
std::optional<std::int64_t> take_int(std::string_view& s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc()) return std::nullopt;
  s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
  return v;
}

bool take(std::string_view& s, std::string_view lit) {
  if (s.substr(0, lit.size()) != lit) return false;
  s.remove_prefix(lit.size());
  return true;
}

std::optional<ChainOperation> parse_op_phrase(std::string_view s) {
  s = trim_view(s);
  ChainOperation op;
  if (take(s, "add ")) {
    op.op = ChainOp::Add;
  } else if (take(s, "subtract ")) {
    op.op = ChainOp::Subtract;
  } else if (take(s, "multiply by ")) {
    op.op = ChainOp::Multiply;
  } else {
    return std::nullopt;
  }
  auto v = take_int(s);
  if (!v || !s.empty()) return std::nullopt;
  op.operand = *v;
  return op;
}

struct OpLine {
  std::int64_t a;
  char sym;
  std::int64_t b;
  std::int64_t c;
};

// "<lead> <phrase>: a s b = c. The value is now c."
std::optional<OpLine> parse_op_line(std::string_view text) {
  const std::size_t colon = text.find(": ");
  if (colon == std::string_view::npos) return std::nullopt;
  std::string_view s = text.substr(colon + 2);
  OpLine line{};
  auto a = take_int(s);
  if (!a || !take(s, " ") || s.empty()) return std::nullopt;
  line.sym = s.front();
  s.remove_prefix(1);
  if (line.sym != '+' && line.sym != '-' && line.sym != '*') return std::nullopt;
  if (!take(s, " ")) return std::nullopt;
  auto b = take_int(s);
  if (!b || !take(s, " = ")) return std::nullopt;
  auto c = take_int(s);
  if (!c) return std::nullopt;
  line.a = *a;
  line.b = *b;
  line.c = *c;
  return line;
}

std::string answer_text(const ChainState& state) { return state.final_answer.value_or(""); }

// Applies one step to the state and returns its tag. The final-answer flag is
// set on steps that state an answer.
LocalEventTag advance(const ChainProblem& chain, ChainState& state, std::string_view text) {
  LocalEventTag tag;
  tag.event = LocalEvent::SoundContinuation;
  const std::string_view t = trim_view(text);

  if (const std::size_t fpos = t.find(kFinalMarker); fpos != std::string_view::npos) {
    std::string answer = trim(t.substr(fpos + kFinalMarker.size()));
    while (!answer.empty() && answer.back() == '.') answer.pop_back();
    state.finished = true;
    state.final_answer = answer;
    tag.final_answer_matches = answers_match(answer, fmt(chain.answer()));
    return tag;
  }
  if (t.substr(0, kIntroHead.size()) == kIntroHead) {
    state.started = true;
    return tag;
  }
  if (const std::size_t rpos = t.find(kRedo); rpos != std::string_view::npos) {
    std::string_view s = t.substr(rpos + kRedo.size());
    auto n = take_int(s);
    const std::size_t is_pos = s.find(" is ");
    if (n && is_pos != std::string_view::npos && *n >= 0 && *n <= chain.length()) {
      s.remove_prefix(is_pos + 4);
      if (auto v = take_int(s)) {
        state.started = true;
        state.ops_done = static_cast<int>(*n);
        state.value = *v;
        state.clean = *v == chain.values[static_cast<std::size_t>(*n)];
        if (!state.clean) {
          tag.event = LocalEvent::LocalError;
        } else {
          tag.event = starts_with_phrase(t, "alternatively") ? LocalEvent::NewApproach : LocalEvent::CorrectsPrior;
        }
        return tag;
      }
    }
  }
  if (auto line = parse_op_line(t)) {
    state.started = true;
    if (state.ops_done >= chain.length()) {
      state.value = line->c;
      state.clean = false;
      tag.event = LocalEvent::LocalError;
      return tag;
    }
    const auto& op = chain.ops[static_cast<std::size_t>(state.ops_done)];
    const bool faithful = line->a == state.value && line->sym == op_symbol(op.op) && line->b == op.operand &&
                          line->c == apply_op(op.op, line->a, line->b);
    ++state.ops_done;
    const bool on_truth = line->c == chain.values[static_cast<std::size_t>(state.ops_done)];
    if (state.clean) {
      tag.event = on_truth ? LocalEvent::SoundContinuation : LocalEvent::LocalError;
    } else if (on_truth) {
      tag.event = LocalEvent::CorrectsPrior;
    } else {
      tag.event = faithful ? LocalEvent::SoundContinuation : LocalEvent::LocalError;
    }
    state.clean = on_truth;
    state.value = line->c;
    return tag;
  }
  return tag;
}

ChainState initial_state(const ChainProblem& chain) {
  ChainState s;
  s.value = chain.start;
  return s;
}

std::string continue_text(const ChainProblem& chain, ChainState state, CompleterRates rates, Rng& rng) {
  std::vector<std::string> steps;
  const int cap = 4 * chain.length() + 16;
  for (int i = 0; i < cap && !state.finished; ++i) {
    StepProposal p = sim_next_step(chain, state, rates, rng);
    advance(chain, state, p.text);
    steps.push_back(std::move(p.text));
  }
  return join(steps, "\n\n");
}

std::string tag_reason(const LocalEventTag& tag, int label) {
  if (tag.final_answer_matches == false) return "The final answer does not match the GT answer.";
  switch (tag.event) {
    case LocalEvent::LocalError: return "The calculation in this step is wrong.";
    case LocalEvent::CorrectsPrior: return "This step corrects the earlier error.";
    case LocalEvent::NewApproach: return "This step restarts with a correct approach.";
    case LocalEvent::SoundContinuation:
      return label == 1 ? "The step is correct." : "This step builds on an earlier error.";
  }
  return {};
}

std::string section(std::string_view text, std::string_view head, std::string_view tail) {
  const std::size_t b = text.rfind(head);
  if (b == std::string_view::npos) return {};
  const std::size_t start = b + head.size();
  const std::size_t e = tail.empty() ? std::string_view::npos : text.find(tail, start);
  return std::string(text.substr(start, e == std::string_view::npos ? std::string_view::npos : e - start));
}

std::vector<std::string> split_blank_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = text.find("\n\n", pos);
    std::string piece = trim(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (!piece.empty()) out.push_back(std::move(piece));
    if (next == std::string_view::npos) break;
    pos = next + 2;
  }
  return out;
}

std::string strength_tag(const char* kind, const char* key, double v) {
  std::ostringstream out;
  out << kind << ':' << key << '=' << v;
  return out.str();
}

}  // namespace

void SimWorld::validate() const {
  if (!(p_err >= 0.0 && p_err <= 1.0)) throw ValidationError("p_err must lie in [0, 1]");
  if (!(p_fix >= 0.0 && p_fix <= 1.0)) throw ValidationError("p_fix must lie in [0, 1]");
  if (!(strength >= 0.0)) throw ValidationError("strength must be >= 0");
  if (min_ops < 1 || max_ops < min_ops) throw ValidationError("need 1 <= min_ops <= max_ops");
}

std::int64_t apply_op(ChainOp op, std::int64_t a, std::int64_t b) {
  switch (op) {
    case ChainOp::Add: return a + b;
    case ChainOp::Subtract: return a - b;
    case ChainOp::Multiply: return a * b;
  }
  return a;
}

ChainProblem ChainProblem::from_parts(std::int64_t start, std::vector<ChainOperation> ops) {
  if (ops.empty()) throw ValidationError("a chain needs at least one operation");
  ChainProblem p;
  p.start = start;
  p.values.push_back(start);
  for (const auto& op : ops) p.values.push_back(apply_op(op.op, p.values.back(), op.operand));
  p.ops = std::move(ops);
  return p;
}

ChainProblem ChainProblem::parse(std::string_view statement) {
  std::string_view s = trim_view(statement);
  const auto fail = [&] { return ValidationError("not an arithmetic-chain statement: " + std::string(statement.substr(0, 80))); };
  if (!take(s, kStatementHead)) throw fail();
  auto start = take_int(s);
  if (!start || !take(s, kStatementOps)) throw fail();
  if (s.size() < kStatementTail.size() || s.substr(s.size() - kStatementTail.size()) != kStatementTail) throw fail();
  s.remove_suffix(kStatementTail.size());
  std::vector<ChainOperation> ops;
  while (!s.empty()) {
    const std::size_t comma = s.find(", ");
    auto op = parse_op_phrase(s.substr(0, comma));
    if (!op) throw fail();
    ops.push_back(*op);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 2);
  }
  return from_parts(*start, std::move(ops));
}

std::string ChainProblem::statement() const {
  std::vector<std::string> phrases;
  for (const auto& op : ops) phrases.push_back(op_phrase(op));
  return std::string(kStatementHead) + fmt(start) + std::string(kStatementOps) + join(phrases, ", ") +
         std::string(kStatementTail);
}

std::string sim_problem_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sim-%06zu", index);
  return buf;
}

ChainProblem make_chain_problem(const SimWorld& world, std::string_view problem_id) {
  world.validate();
  Rng rng(derive_seed(world.seed, "problem", problem_id));
  const std::int64_t start = rng.uniform_int(2, 30);
  const int length = static_cast<int>(rng.uniform_int(world.min_ops, world.max_ops));
  std::vector<ChainOperation> ops;
  std::int64_t v = start;
  for (int i = 0; i < length; ++i) {
    ChainOperation op;
    const bool allow_multiply = std::llabs(v) <= 200;
    const auto kind = rng.uniform_int(0, allow_multiply ? 2 : 1);
    op.op = kind == 0 ? ChainOp::Add : kind == 1 ? ChainOp::Subtract : ChainOp::Multiply;
    op.operand = op.op == ChainOp::Multiply ? rng.uniform_int(2, 3) : rng.uniform_int(1, 19);
    v = apply_op(op.op, v, op.operand);
    ops.push_back(op);
  }
  return ChainProblem::from_parts(start, std::move(ops));
}

Problem sim_problem(const SimWorld& world, std::string_view problem_id) {
  const ChainProblem chain = make_chain_problem(world, problem_id);
  return Problem::make(std::string(problem_id), chain.statement(), fmt(chain.answer()), "sim");
}

std::vector<Problem> sim_problems(const SimWorld& world, std::size_t count, std::size_t first) {
  std::vector<Problem> out;
  out.reserve(count);
  for (std::size_t i = first; i < first + count; ++i) out.push_back(sim_problem(world, sim_problem_id(i)));
  return out;
}

Replay sim_replay(const ChainProblem& chain, std::span<const Step> steps) {
  Replay r;
  r.state = initial_state(chain);
  for (const auto& s : steps) r.tags.push_back(advance(chain, r.state, s.text));
  for (std::size_t i = 0; i + 1 < r.tags.size(); ++i) r.tags[i].final_answer_matches.reset();
  return r;
}

CompleterRates completer_rates(const SimWorld& world, double strength) {
  CompleterRates r;
  r.err = 1.0 - std::min(1.0, (1.0 - world.p_err) * strength);
  r.fix = std::min(1.0, world.p_fix * strength);
  return r;
}

double sim_success_probability(const ChainProblem& chain, const ChainState& state, CompleterRates rates) {
  if (state.finished) return answers_match(answer_text(state), fmt(chain.answer())) ? 1.0 : 0.0;
  double c = state.clean ? 1.0 : 0.0;
  const int remaining = chain.length() - state.ops_done;
  for (int i = 0; i < remaining; ++i) {
    c += (1.0 - c) * rates.fix;
    c *= 1.0 - rates.err;
  }
  return c + (1.0 - c) * rates.fix;
}

StepProposal sim_next_step(const ChainProblem& chain, const ChainState& state, CompleterRates rates, Rng& rng) {
  StepProposal p;
  if (state.finished) {
    p.text = "Final answer: " + answer_text(state) + ".";
    p.is_final = true;
    return p;
  }
  if (!state.started) {
    p.text = std::string(kIntroHead) + fmt(chain.start) + " and apply the operations one at a time.";
    return p;
  }
  if (!state.clean && rng.bernoulli(rates.fix)) {
    const auto n = static_cast<std::size_t>(state.ops_done);
    std::string lead = rng.bernoulli(0.5) ? std::string(kNewApproachLead)
                                          : std::string(kCorrectionLeads[rng.uniform_int(0, 2)]);
    p.text = lead + " " + std::string(kRedo) + fmt(static_cast<std::int64_t>(n)) + (n == 1 ? " operation is " : " operations is ") +
             fmt(chain.values[n]) + ". The value is now " + fmt(chain.values[n]) + ".";
    return p;
  }
  if (state.ops_done < chain.length()) {
    const auto& op = chain.ops[static_cast<std::size_t>(state.ops_done)];
    std::int64_t c = apply_op(op.op, state.value, op.operand);
    if (state.clean && rng.bernoulli(rates.err)) {
      const std::int64_t delta = rng.uniform_int(1, 9);
      c += rng.bernoulli(0.5) ? delta : -delta;
    }
    const std::string lead = state.ops_done == 0 ? "First," : std::string(kOpLeads[rng.uniform_int(0, 2)]);
    p.text = lead + " " + op_phrase(op) + ": " + fmt(state.value) + " " + op_symbol(op.op) + " " + fmt(op.operand) +
             " = " + fmt(c) + ". The value is now " + fmt(c) + ".";
    return p;
  }
  p.text = "That completes all the operations. Final answer: " + fmt(state.value) + ".";
  p.is_final = true;
  return p;
}

SimTrace sim_sample_trace(const ChainProblem& chain, const std::string& problem_id, CompleterRates rates,
                          std::uint64_t seed, const std::string& generator_tag) {
  Rng rng(seed);
  ChainState state = initial_state(chain);
  std::vector<std::string> texts;
  std::vector<LocalEventTag> tags;
  const int cap = 4 * chain.length() + 16;
  for (int i = 0; i < cap && !state.finished; ++i) {
    StepProposal p = sim_next_step(chain, state, rates, rng);
    tags.push_back(advance(chain, state, p.text));
    texts.push_back(std::move(p.text));
  }
  for (std::size_t i = 0; i + 1 < tags.size(); ++i) tags[i].final_answer_matches.reset();
  if (!tags.back().final_answer_matches) tags.back().final_answer_matches = false;
  return SimTrace{ReasoningTrace::from_texts(problem_id, texts, generator_tag), std::move(tags)};
}

SimTrace sim_generate_trace(const SimWorld& world, std::string_view problem_id) {
  const ChainProblem chain = make_chain_problem(world, problem_id);
  return sim_sample_trace(chain, std::string(problem_id), CompleterRates{world.p_err, world.p_fix},
                          derive_seed(world.seed, "trace", problem_id), "sim");
}

DatasetRecord sim_gold_record(const SimWorld& world, std::string_view problem_id) {
  Problem problem = sim_problem(world, problem_id);
  SimTrace st = sim_generate_trace(world, problem_id);
  const auto labels = expected_labels(st.tags);
  std::vector<StepAnnotation> anns;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    anns.push_back(StepAnnotation{static_cast<int>(i), labels[i], tag_reason(st.tags[i], labels[i]), st.tags[i], "oracle"});
  }
  const bool correct = st.tags.back().final_answer_matches.value_or(false);
  return DatasetRecord{std::move(problem), AnnotatedTrace::create(std::move(st.trace), std::move(anns), correct)};
}

std::vector<DatasetRecord> sim_dataset(const SimWorld& world, std::size_t count, std::size_t first) {
  std::vector<DatasetRecord> out;
  out.reserve(count);
  for (std::size_t i = first; i < first + count; ++i) out.push_back(sim_gold_record(world, sim_problem_id(i)));
  return out;
}

RolloutOutcome sim_complete_from_prefix(const SimWorld& world, const Problem& problem, const ReasoningTrace& trace,
                                        int prefix_len, double strength, std::uint64_t seed) {
  if (prefix_len < 1 || prefix_len > static_cast<int>(trace.size())) {
    throw ValidationError("prefix_len " + std::to_string(prefix_len) + " out of range");
  }
  const ChainProblem chain = ChainProblem::parse(problem.statement);
  const Replay replay = sim_replay(chain, std::span(trace.steps).first(static_cast<std::size_t>(prefix_len)));
  Rng rng(derive_seed(world.seed, seed));
  RolloutOutcome out;
  out.prefix_len = prefix_len;
  out.completion_text = continue_text(chain, replay.state, completer_rates(world, strength), rng);
  out.token_cost = count_tokens(out.completion_text);
  const auto answer = extract_final_answer(out.completion_text);
  out.reached_correct = answer.has_value() && answers_match(*answer, problem.gold_answer);
  return out;
}

std::string sim_judge(const SimWorld& world, const JudgeRequest& request, double judge_accuracy, std::uint64_t seed) {
  const ChainProblem chain = ChainProblem::parse(request.problem.statement);
  Replay replay = sim_replay(chain, request.steps);
  if (replay.tags.empty()) throw ValidationError("judge request has no steps");
  if (!replay.tags.back().final_answer_matches) replay.tags.back().final_answer_matches = false;
  const auto labels = expected_labels(replay.tags);
  Rng rng(derive_seed(world.seed, "judge", seed));
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int score = labels[i];
    if (rng.bernoulli(1.0 - judge_accuracy)) score = 1 - score;
    nlohmann::ordered_json entry;
    entry["STEP " + std::to_string(request.steps[i].index)] = score;
    entry["Reason"] = tag_reason(replay.tags[i], labels[i]);
    out.push_back(std::move(entry));
  }
  return out.dump(4);
}

SimCompleter::SimCompleter(SimWorld world, double strength) : world_(world), strength_(strength) { world_.validate(); }

std::string SimCompleter::id() const { return strength_tag("sim-completer", "strength", strength_); }

std::string SimCompleter::complete(std::string_view prompt, const SamplingParams& params) {
  const std::string statement = trim(section(prompt, "\nProblem:\n", "\n\nPartial solution:\n"));
  const std::string prefix = section(prompt, "\n\nPartial solution:\n", "\n\nContinuation:");
  ChainProblem chain;
  try {
    chain = ChainProblem::parse(statement);
  } catch (const ValidationError& e) {
    throw BackendError(std::string("simulated completer: ") + e.what(), id());
  }
  std::vector<std::string> texts;
  if (trim_view(prefix) != "(none)") texts = split_blank_lines(prefix);
  const Replay replay = sim_replay(chain, make_steps(texts));
  Rng rng(derive_seed(world_.seed, "complete", params.seed.value_or(stable_hash(prompt))));
  return continue_text(chain, replay.state, completer_rates(world_, strength_), rng);
}

SimJudge::SimJudge(SimWorld world, double judge_accuracy) : world_(world), accuracy_(judge_accuracy) {
  world_.validate();
  if (!(judge_accuracy >= 0.0 && judge_accuracy <= 1.0)) throw ValidationError("judge accuracy must lie in [0, 1]");
}

std::string SimJudge::id() const { return strength_tag("sim-judge", "accuracy", accuracy_); }

std::string SimJudge::complete(std::string_view prompt, const SamplingParams& params) {
  const std::string statement = trim(section(prompt, "[Math Problem]\n", "\n\n[Solution]\n"));
  const std::string solution = section(prompt, "\n\n[Solution]\n", "\n\n[GT Answer]\n");
  std::string gold = section(prompt, "\n\n[GT Answer]\n", "\n\n");
  gold = trim(gold);
  std::vector<std::string> texts;
  for (auto& block : split_blank_lines(solution)) {
    const std::size_t colon = block.find(": ");
    if (block.rfind("STEP ", 0) != 0 || colon == std::string::npos) {
      if (texts.empty()) throw BackendError("simulated judge: malformed solution block", id());
      texts.back() += "\n\n" + block;
      continue;
    }
    texts.push_back(block.substr(colon + 2));
  }
  if (texts.empty()) throw BackendError("simulated judge: no steps in prompt", id());
  JudgeRequest req;
  try {
    req.problem = Problem::make("judge", statement, gold.empty() ? "?" : gold);
    req.steps = make_steps(texts);
    return sim_judge(world_, req, accuracy_, params.seed.value_or(stable_hash(prompt)));
  } catch (const ValidationError& e) {
    throw BackendError(std::string("simulated judge: ") + e.what(), id());
  }
}

SimResegmenter::SimResegmenter(SegmentationConfig config) : config_(std::move(config)) {}

std::string SimResegmenter::id() const { return "sim-resegmenter"; }

std::string SimResegmenter::complete(std::string_view prompt, const SamplingParams&) {
  const std::string text = section(prompt, "[Reasoning]\n", "");
  nlohmann::json out = nlohmann::json::array();
  try {
    for (const auto& s : segment_srw(text, config_)) out.push_back(s.text);
  } catch (const ValidationError& e) {
    throw BackendError(std::string("simulated resegmenter: ") + e.what(), id());
  }
  return out.dump();
}

SimGenerator::SimGenerator(SimWorld world, double strength)
    : world_(world), rates_(completer_rates(world, strength)), strength_(strength) {
  world_.validate();
}

std::string SimGenerator::id() const { return strength_tag("sim-generator", "strength", strength_); }

ReasoningTrace SimGenerator::sample_trace(const Problem& problem, std::uint64_t seed) {
  const ChainProblem chain = ChainProblem::parse(problem.statement);
  return sim_sample_trace(chain, problem.id, rates_, derive_seed(world_.seed, seed), id()).trace;
}

StepProposal SimGenerator::next_step(const Problem& problem, std::span<const Step> prefix, std::uint64_t seed) {
  const ChainProblem chain = ChainProblem::parse(problem.statement);
  const Replay replay = sim_replay(chain, prefix);
  Rng rng(derive_seed(world_.seed, seed));
  return sim_next_step(chain, replay.state, rates_, rng);
}

std::string SimOracleScorer::id() const { return "sim-oracle"; }

std::vector<double> SimOracleScorer::score_steps(const Problem& problem, const ReasoningTrace& trace) const {
  const ChainProblem chain = ChainProblem::parse(problem.statement);
  ChainState state = initial_state(chain);
  std::vector<LocalEventTag> tags;
  std::vector<std::optional<bool>> answered;
  for (const auto& s : trace.steps) {
    LocalEventTag tag = advance(chain, state, s.text);
    answered.push_back(tag.final_answer_matches);
    tag.final_answer_matches.reset();
    tags.push_back(tag);
  }
  const auto labels = expected_labels(tags);
  std::vector<double> scores;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool ok = labels[i] == 1 && answered[i] != false;
    scores.push_back(ok ? kScoreHigh : kScoreLow);
  }
  return scores;
}

}  // namespace prmkit
