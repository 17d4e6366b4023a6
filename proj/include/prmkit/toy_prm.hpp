#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prmkit/scorer.hpp"
#include "prmkit/types.hpp"

namespace prmkit {

inline constexpr std::string_view kFeatureSchema = "prefix-features-v1";
inline constexpr int kFeatureDim = 6;

/// Equalities "a op b = c" whose two sides disagree beyond the rounding
/// implied by c's decimals.
int count_broken_equalities(std::string_view text);

/// Fixed features of the prefix s_<=i, in order:
///   0 step token count / 100 (capped at 10)
///   1 relative position i / K
///   2 reflection words in step i
///   3 broken equalities in steps 0..i
///   4 reflection words in steps 0..i-1
///   5 1 if step i repeats an earlier step (>= 80% of its distinct tokens
///     contained in that step), else 0
class FeatureExtractor {
 public:
  FeatureExtractor();
  explicit FeatureExtractor(std::vector<std::string> reflection_words);

  std::vector<double> extract(const ReasoningTrace& trace, int step_index) const;
  std::vector<std::vector<double>> extract_all(const ReasoningTrace& trace) const;

 private:
  std::vector<std::string> reflection_words_;
};

double sigmoid(double z);

struct ToyPrmModel {
  std::vector<double> weights = std::vector<double>(kFeatureDim, 0.0);
  double bias = 0.0;
  std::string feature_schema_version{kFeatureSchema};

  double logit(std::span<const double> features) const;
  /// sigmoid(logit), kept inside the open interval (0, 1).
  double score(std::span<const double> features) const;

  bool operator==(const ToyPrmModel&) const = default;
};

/// Binary cross-entropy summed over steps: -sum[y log s + (1-y) log(1-s)].
/// This is the classification objective with the sign that makes it a loss
/// to minimize. Throws ValidationError on length mismatch or s outside (0,1).
double prm_loss(std::span<const int> labels, std::span<const double> scores);

struct Batch {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// Mean cross-entropy over the batch plus (l2 / 2) * |w|^2, computed from
/// logits with a stable softplus.
double mean_cross_entropy(const ToyPrmModel& model, const Batch& batch, double l2 = 0.0);

struct Gradient {
  std::vector<double> weights;
  double bias = 0.0;
};

/// Analytic gradient of mean_cross_entropy: mean of (s - y) x, plus l2 * w.
Gradient prm_loss_gradient(const ToyPrmModel& model, const Batch& batch, double l2 = 0.0);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 20;
  int batch_size = 64;
  double l2 = 1e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss_curve;  // full-data loss after each epoch
  std::size_t examples = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  bool degenerate_class_balance = false;  // only one label present
};

struct TrainResult {
  ToyPrmModel model;
  TrainReport report;
};

Batch build_batch(std::span<const DatasetRecord> dataset, const FeatureExtractor& extractor);

/// Mini-batch gradient descent with seeded shuffling. Deterministic.
TrainResult train_batch(const Batch& batch, const TrainConfig& config);
TrainResult train(std::span<const DatasetRecord> dataset, const TrainConfig& config,
                  const FeatureExtractor& extractor = FeatureExtractor());

/// Text model format:
///   prmkit-toy-prm 1
///   schema <version>
///   dim <n>
///   weights <w0> ... <wn-1>
///   bias <b>
std::string format_model(const ToyPrmModel& model);
ToyPrmModel parse_model(std::string_view text);
void save_model(const ToyPrmModel& model, const std::filesystem::path& path);
ToyPrmModel load_model(const std::filesystem::path& path);

class ToyPrmScorer final : public StepScorer {
 public:
  explicit ToyPrmScorer(ToyPrmModel model, FeatureExtractor extractor = FeatureExtractor(),
                        std::string name = "toy-prm");
  std::string id() const override;
  std::vector<double> score_steps(const Problem& problem,
                                  const ReasoningTrace& trace) const override;
  std::vector<double> logits(const ReasoningTrace& trace) const;

 private:
  ToyPrmModel model_;
  FeatureExtractor extractor_;
  std::string name_;
};

/// FE: every trace keeps steps up to and including its first label-0 step.
std::vector<DatasetRecord> truncate_at_first_error(std::span<const DatasetRecord> dataset);

/// FES: the FE dataset, extended with FE-truncated traces from `supplement`
/// (in order) until its step count reaches that of the untruncated dataset.
/// The last added trace may overshoot; traces are never cut further.
std::vector<DatasetRecord> truncate_fes(std::span<const DatasetRecord> dataset,
                                        std::span<const DatasetRecord> supplement);

std::size_t total_steps(std::span<const DatasetRecord> dataset);

}  // namespace prmkit
