#include "prmkit/toy_prm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "prmkit/error.hpp"
#include "prmkit/rng.hpp"
#include "prmkit/segmenter.hpp"
#include "prmkit/text.hpp"

namespace prmkit {

namespace {

enum class TokKind { Number, Op, Eq, Other };

struct Tok {
  TokKind kind;
  double value = 0.0;
  int decimals = 0;
  char op = 0;
};

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::vector<Tok> arithmetic_tokens(std::string_view s) {
  std::vector<Tok> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    const bool prev_number = !out.empty() && out.back().kind == TokKind::Number;
    const bool neg = c == '-' && !prev_number && i + 1 < s.size() && is_digit(s[i + 1]);
    if (is_digit(c) || neg) {
      std::size_t j = neg ? i + 1 : i;
      while (j < s.size() && is_digit(s[j])) ++j;
      int decimals = 0;
      if (j + 1 < s.size() && s[j] == '.' && is_digit(s[j + 1])) {
        ++j;
        while (j < s.size() && is_digit(s[j])) {
          ++j;
          ++decimals;
        }
      }
      Tok t{TokKind::Number};
      t.value = std::strtod(std::string(s.substr(i, j - i)).c_str(), nullptr);
      t.decimals = decimals;
      out.push_back(t);
      i = j;
      continue;
    }
    if (c == '+' || c == '-' || c == '*' || c == '/') {
      Tok t{TokKind::Op};
      t.op = c;
      out.push_back(t);
      ++i;
      continue;
    }
    if (s.substr(i, 2) == "\xC3\x97" || s.substr(i, 2) == "\xC3\xB7") {
      Tok t{TokKind::Op};
      t.op = s[i + 1] == '\x97' ? '*' : '/';
      out.push_back(t);
      i += 2;
      continue;
    }
    out.push_back(Tok{c == '=' ? TokKind::Eq : TokKind::Other});
    ++i;
  }
  return out;
}

struct StepInfo {
  int tokens = 0;
  int reflections = 0;
  int broken = 0;
  std::vector<std::string> distinct;  // sorted lowercase tokens
};

int count_reflections(std::string_view text, const std::vector<std::string>& words) {
  int n = 0;
  for (const auto& w : words) n += count_phrase(text, w);
  return n;
}

StepInfo step_info(const Step& step, const std::vector<std::string>& words) {
  StepInfo info;
  info.tokens = count_tokens(step.text);
  info.reflections = count_reflections(step.text, words);
  info.broken = count_broken_equalities(step.text);
  for (auto tok : split_whitespace(step.text)) info.distinct.push_back(to_lower(tok));
  std::sort(info.distinct.begin(), info.distinct.end());
  info.distinct.erase(std::unique(info.distinct.begin(), info.distinct.end()), info.distinct.end());
  return info;
}

bool repeats(const StepInfo& step, const StepInfo& earlier) {
  if (step.distinct.empty()) return false;
  std::size_t hit = 0;
  for (const auto& t : step.distinct) {
    if (std::binary_search(earlier.distinct.begin(), earlier.distinct.end(), t)) ++hit;
  }
  return static_cast<double>(hit) >= 0.8 * static_cast<double>(step.distinct.size());
}

std::vector<double> features_at(const std::vector<StepInfo>& infos, int i, std::size_t k) {
  const StepInfo& cur = infos[static_cast<std::size_t>(i)];
  int broken = 0;
  int prior_reflections = 0;
  bool repeat = false;
  for (int j = 0; j <= i; ++j) broken += infos[static_cast<std::size_t>(j)].broken;
  for (int j = 0; j < i; ++j) {
    prior_reflections += infos[static_cast<std::size_t>(j)].reflections;
    repeat = repeat || repeats(cur, infos[static_cast<std::size_t>(j)]);
  }
  return {std::min(cur.tokens / 100.0, 10.0),
          static_cast<double>(i) / static_cast<double>(k),
          static_cast<double>(cur.reflections),
          static_cast<double>(broken),
          static_cast<double>(prior_reflections),
          repeat ? 1.0 : 0.0};
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

int count_broken_equalities(std::string_view text) {
  const auto toks = arithmetic_tokens(text);
  int broken = 0;
  for (std::size_t i = 0; i + 4 < toks.size(); ++i) {
    if (toks[i].kind != TokKind::Number || toks[i + 1].kind != TokKind::Op || toks[i + 2].kind != TokKind::Number ||
        toks[i + 3].kind != TokKind::Eq || toks[i + 4].kind != TokKind::Number) {
      continue;
    }
    if (i > 0 && toks[i - 1].kind == TokKind::Op) continue;  // longer expression, not checked
    const double a = toks[i].value;
    const double b = toks[i + 2].value;
    const Tok& c = toks[i + 4];
    double lhs = 0.0;
    bool defined = true;
    switch (toks[i + 1].op) {
      case '+': lhs = a + b; break;
      case '-': lhs = a - b; break;
      case '*': lhs = a * b; break;
      default:
        defined = b != 0.0;
        lhs = defined ? a / b : 0.0;
        break;
    }
    const double tolerance = 0.5 * std::pow(10.0, -c.decimals) + 1e-9 * std::abs(lhs);
    if (!defined || std::abs(lhs - c.value) > tolerance) ++broken;
    i += 3;
  }
  return broken;
}

FeatureExtractor::FeatureExtractor() : reflection_words_(default_reflection_words()) {}

FeatureExtractor::FeatureExtractor(std::vector<std::string> reflection_words)
    : reflection_words_(std::move(reflection_words)) {}

std::vector<double> FeatureExtractor::extract(const ReasoningTrace& trace, int step_index) const {
  if (step_index < 0 || step_index >= static_cast<int>(trace.size())) {
    throw ValidationError("step index " + std::to_string(step_index) + " out of range");
  }
  std::vector<StepInfo> infos;
  for (int j = 0; j <= step_index; ++j) infos.push_back(step_info(trace.steps[static_cast<std::size_t>(j)], reflection_words_));
  return features_at(infos, step_index, trace.size());
}

std::vector<std::vector<double>> FeatureExtractor::extract_all(const ReasoningTrace& trace) const {
  std::vector<StepInfo> infos;
  for (const auto& s : trace.steps) infos.push_back(step_info(s, reflection_words_));
  std::vector<std::vector<double>> out;
  for (int i = 0; i < static_cast<int>(infos.size()); ++i) out.push_back(features_at(infos, i, trace.size()));
  return out;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double ToyPrmModel::logit(std::span<const double> features) const {
  if (features.size() != weights.size()) {
    throw ValidationError("feature vector has " + std::to_string(features.size()) + " entries, model expects " +
                          std::to_string(weights.size()));
  }
  double z = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * features[i];
  return z;
}

double ToyPrmModel::score(std::span<const double> features) const {
  return std::clamp(sigmoid(logit(features)), 1e-15, 1.0 - 1e-15);
}

double prm_loss(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) {
    throw ValidationError("prm_loss: " + std::to_string(labels.size()) + " labels vs " + std::to_string(scores.size()) + " scores");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double s = scores[i];
    if (!(s > 0.0 && s < 1.0)) throw ValidationError("prm_loss: score " + std::to_string(s) + " outside (0, 1)");
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("prm_loss: label must be 0 or 1");
    loss -= labels[i] == 1 ? std::log(s) : std::log1p(-s);
  }
  return loss;
}

double mean_cross_entropy(const ToyPrmModel& model, const Batch& batch, double l2) {
  if (batch.size() == 0) throw ValidationError("empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double z = model.logit(batch.features[i]);
    total += softplus(z) - batch.labels[i] * z;
  }
  double reg = 0.0;
  for (double w : model.weights) reg += w * w;
  return total / static_cast<double>(batch.size()) + 0.5 * l2 * reg;
}

Gradient prm_loss_gradient(const ToyPrmModel& model, const Batch& batch, double l2) {
  if (batch.size() == 0) throw ValidationError("empty batch");
  Gradient g;
  g.weights.assign(model.weights.size(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double r = sigmoid(model.logit(batch.features[i])) - batch.labels[i];
    for (std::size_t d = 0; d < g.weights.size(); ++d) g.weights[d] += r * batch.features[i][d];
    g.bias += r;
  }
  const double n = static_cast<double>(batch.size());
  for (std::size_t d = 0; d < g.weights.size(); ++d) g.weights[d] = g.weights[d] / n + l2 * model.weights[d];
  g.bias /= n;
  return g;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(l2 >= 0.0)) throw ValidationError("l2 must be >= 0");
}

Batch build_batch(std::span<const DatasetRecord> dataset, const FeatureExtractor& extractor) {
  Batch batch;
  for (const auto& r : dataset) {
    auto feats = extractor.extract_all(r.annotated.trace());
    const auto labels = r.annotated.labels();
    for (std::size_t i = 0; i < feats.size(); ++i) {
      batch.features.push_back(std::move(feats[i]));
      batch.labels.push_back(labels[i]);
    }
  }
  return batch;
}

TrainResult train_batch(const Batch& batch, const TrainConfig& config) {
  config.validate();
  if (batch.size() == 0) throw ValidationError("training set is empty");
  const std::size_t dim = batch.features.front().size();
  TrainResult result;
  result.model.weights.assign(dim, 0.0);
  result.report.examples = batch.size();
  for (int y : batch.labels) (y == 1 ? result.report.positives : result.report.negatives)++;
  result.report.degenerate_class_balance = result.report.positives == 0 || result.report.negatives == 0;

  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(config.seed, "train"));
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  Batch mini;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      mini.features.clear();
      mini.labels.clear();
      for (std::size_t j = start; j < end; ++j) {
        mini.features.push_back(batch.features[order[j]]);
        mini.labels.push_back(batch.labels[order[j]]);
      }
      const Gradient g = prm_loss_gradient(result.model, mini, config.l2);
      for (std::size_t d = 0; d < dim; ++d) result.model.weights[d] -= config.learning_rate * g.weights[d];
      result.model.bias -= config.learning_rate * g.bias;
    }
    result.report.loss_curve.push_back(mean_cross_entropy(result.model, batch, config.l2));
  }
  return result;
}

TrainResult train(std::span<const DatasetRecord> dataset, const TrainConfig& config, const FeatureExtractor& extractor) {
  if (dataset.empty()) throw ValidationError("training set is empty");
  return train_batch(build_batch(dataset, extractor), config);
}

std::string format_model(const ToyPrmModel& model) {
  std::string out = "prmkit-toy-prm 1\nschema " + model.feature_schema_version + "\ndim " +
                    std::to_string(model.weights.size()) + "\nweights";
  for (double w : model.weights) out += " " + format_double(w);
  out += "\nbias " + format_double(model.bias) + "\n";
  return out;
}

ToyPrmModel parse_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string word;
  int version = 0;
  const auto bad = [](const std::string& what) { return ValidationError("model file: " + what); };
  if (!(in >> word >> version) || word != "prmkit-toy-prm") throw bad("missing 'prmkit-toy-prm' header");
  if (version != 1) throw bad("unsupported format version " + std::to_string(version));
  ToyPrmModel model;
  if (!(in >> word >> model.feature_schema_version) || word != "schema") throw bad("missing schema line");
  if (model.feature_schema_version != kFeatureSchema) {
    throw bad("schema '" + model.feature_schema_version + "' does not match extractor schema '" + std::string(kFeatureSchema) + "'");
  }
  std::size_t dim = 0;
  if (!(in >> word >> dim) || word != "dim") throw bad("missing dim line");
  if (dim != static_cast<std::size_t>(kFeatureDim)) throw bad("dim " + std::to_string(dim) + " != " + std::to_string(kFeatureDim));
  if (!(in >> word) || word != "weights") throw bad("missing weights line");
  model.weights.assign(dim, 0.0);
  for (auto& w : model.weights) {
    if (!(in >> w) || !std::isfinite(w)) throw bad("bad weight value");
  }
  if (!(in >> word >> model.bias) || word != "bias" || !std::isfinite(model.bias)) throw bad("missing or bad bias line");
  if (in >> word) throw bad("unexpected trailing content '" + word + "'");
  return model;
}

void save_model(const ToyPrmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << format_model(model);
  if (!out) throw ValidationError("failed writing " + path.string());
}

ToyPrmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

ToyPrmScorer::ToyPrmScorer(ToyPrmModel model, FeatureExtractor extractor, std::string name)
    : model_(std::move(model)), extractor_(std::move(extractor)), name_(std::move(name)) {
  if (model_.feature_schema_version != kFeatureSchema || model_.weights.size() != static_cast<std::size_t>(kFeatureDim)) {
    throw ValidationError("model schema '" + model_.feature_schema_version + "' does not match the feature extractor");
  }
}

std::string ToyPrmScorer::id() const { return name_; }

std::vector<double> ToyPrmScorer::score_steps(const Problem&, const ReasoningTrace& trace) const {
  std::vector<double> out;
  for (const auto& f : extractor_.extract_all(trace)) out.push_back(model_.score(f));
  return out;
}

std::vector<double> ToyPrmScorer::logits(const ReasoningTrace& trace) const {
  std::vector<double> out;
  for (const auto& f : extractor_.extract_all(trace)) out.push_back(model_.logit(f));
  return out;
}

namespace {

DatasetRecord truncate_record(const DatasetRecord& r) {
  const auto labels = r.annotated.labels();
  const auto first = std::find(labels.begin(), labels.end(), 0);
  if (first == labels.end() || first + 1 == labels.end()) return r;
  const auto keep = static_cast<std::size_t>(first - labels.begin()) + 1;
  const auto& trace = r.annotated.trace();
  ReasoningTrace cut = ReasoningTrace::from_steps(
      trace.problem_id, std::vector<Step>(trace.steps.begin(), trace.steps.begin() + static_cast<std::ptrdiff_t>(keep)),
      trace.generator_tag);
  std::vector<StepAnnotation> anns(r.annotated.annotations().begin(),
                                   r.annotated.annotations().begin() + static_cast<std::ptrdiff_t>(keep));
  for (auto& a : anns) a.local_tag.reset();
  return DatasetRecord{r.problem, AnnotatedTrace::create(std::move(cut), std::move(anns), r.annotated.solution_correct())};
}

}  // namespace

std::vector<DatasetRecord> truncate_at_first_error(std::span<const DatasetRecord> dataset) {
  std::vector<DatasetRecord> out;
  out.reserve(dataset.size());
  for (const auto& r : dataset) out.push_back(truncate_record(r));
  return out;
}

std::vector<DatasetRecord> truncate_fes(std::span<const DatasetRecord> dataset, std::span<const DatasetRecord> supplement) {
  std::vector<DatasetRecord> out = truncate_at_first_error(dataset);
  const std::size_t target = total_steps(dataset);
  std::size_t steps = total_steps(out);
  for (const auto& r : supplement) {
    if (steps >= target) break;
    out.push_back(truncate_record(r));
    steps += out.back().annotated.trace().size();
  }
  return out;
}

std::size_t total_steps(std::span<const DatasetRecord> dataset) {
  std::size_t n = 0;
  for (const auto& r : dataset) n += r.annotated.trace().size();
  return n;
}

}  // namespace prmkit
