#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "mcdgln/model.hpp"

namespace mcdgln::train {

using grad::ParamSet;

struct AdamState {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
  std::size_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// Bias-corrected Adam update from the ParamSet's gradient accumulators.
void adam_step(ParamSet& params, AdamState& state, double lr);

struct TrainResult {
  ParamSet params;
  std::vector<double> loss_history;  // per-epoch mean total loss
  std::size_t steps = 0;
};

/// Seeded shuffled mini-batches over `subjects`; fails unless both labels are present.
TrainResult train_fold(std::span<const model::SubjectInput> subjects, const io::RunConfig& cfg, std::uint64_t seed);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double auroc = 0.5;
  bool precision_undefined = false;  // no positive predictions
  bool auroc_undefined = false;      // single-class batch
};

Metrics metrics(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

/// Rank-statistic AUROC (ties count 0.5). Requires both classes.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Stratified, seeded assignment of subject indices to k folds.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed);

struct FoldResult {
  std::size_t fold = 0;
  Metrics metrics;
  std::vector<double> loss_history;
  std::vector<std::string> validation_ids;
};

struct MetricSummary {
  double accuracy = 0.0, precision = 0.0, f1 = 0.0, auroc = 0.0;
};

struct MetricsReport {
  io::RunConfig config;
  std::vector<FoldResult> folds;
  MetricSummary mean;
  MetricSummary stddev;  // sample standard deviation across folds
};

void summarize(MetricsReport& report);

struct CvOptions {
  std::size_t jobs = 1;
  /// When set, each fold's trained parameters are written to <dir>/fold_<i>.ckpt.
  std::string checkpoint_dir;
};

MetricsReport cross_validate(std::span<const model::SubjectInput> subjects, const io::RunConfig& cfg,
                             const CvOptions& options = {});

nlohmann::ordered_json config_json(const io::RunConfig& cfg);
nlohmann::ordered_json metrics_json(const Metrics& m);
nlohmann::ordered_json report_json(const MetricsReport& report);

}  // namespace mcdgln::train
