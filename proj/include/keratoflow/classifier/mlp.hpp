#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "keratoflow/domain/features.hpp"
#include "keratoflow/domain/split.hpp"
#include "keratoflow/matrix.hpp"
#include "keratoflow/metrics/metrics.hpp"
#include "keratoflow/nn/network.hpp"
#include "keratoflow/nn/optimizer.hpp"

namespace keratoflow::classifier {

inline constexpr std::size_t kClassCount = 4;

/// 29-128-256-4 ReLU network producing grade logits.
struct MlpModel {
  nn::DenseNetwork network;
  domain::FeatureStats feature_stats;
  int schema_version = domain::kFeatureSchemaVersion;

  nlohmann::json to_json() const;
  static MlpModel from_json(const nlohmann::json& doc);
};

struct TrainingHistory {
  std::vector<double> train_loss;  // mean minibatch loss over the epoch
  std::vector<double> val_loss;
  std::vector<double> val_accuracy;
};

/// Standardized features with 0-based class labels. source_index maps each
/// row back to its cohort index (used for split-hygiene instrumentation).
struct LabeledSet {
  Matrix features;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> source_index;

  std::size_t size() const noexcept { return labels.size(); }
};

struct MlpOptions {
  std::vector<std::size_t> hidden{128, 256};
  /// Return the epoch with the best validation accuracy instead of the last one.
  bool select_best_validation = false;
  /// Called with the cohort indices of every minibatch that enters a gradient.
  std::function<void(std::span<const std::size_t>)> batch_observer;
};

/// Minibatch training on softmax cross-entropy; minibatches are reshuffled
/// each epoch from config.seed. Throws ValidationError for an empty or
/// unlabeled training set, or features that are not 29 wide.
struct TrainedMlp {
  MlpModel model;
  TrainingHistory history;
};
TrainedMlp train_mlp(const LabeledSet& train, const LabeledSet& validation,
                     const domain::FeatureStats& stats, const nn::TrainConfig& config,
                     const MlpOptions& options = {});

/// Softmax of the logits for one standardized vector.
std::array<double, kClassCount> predict_proba(const MlpModel& model,
                                              const domain::FeatureVector& features);
/// One probability row per input row.
Matrix predict_proba(const MlpModel& model, const Matrix& standardized);

/// Mean cross-entropy and accuracy of `model` on a labeled set.
struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};
Evaluation evaluate(const nn::DenseNetwork& network, const LabeledSet& data);

/// Labeled cohort as handed to the repetition protocol: raw (unstandardized)
/// features and 0-based class labels.
struct LabeledCohort {
  Matrix raw_features;
  std::vector<std::size_t> labels;
};

struct RepetitionOptions {
  std::size_t repetitions = 100;
  std::uint64_t base_seed = 0;
  int jobs = 1;
  MlpOptions mlp;
  /// Called as (repetition, cohort indices) for every minibatch.
  std::function<void(std::size_t, std::span<const std::size_t>)> batch_observer;
};

struct RepetitionRun {
  std::uint64_t seed = 0;
  domain::DatasetSplit split;
  TrainingHistory history;
  double test_accuracy = 0.0;
  Matrix test_probabilities;  // rows follow split.test
  std::vector<std::size_t> test_labels;
  MlpModel model;
};

/// Mean and variance across repetitions, per epoch.
struct EpochBand {
  std::vector<double> mean;
  std::vector<double> variance;  // sample variance (n-1); 0 for one repetition
};

struct RepetitionReport {
  std::vector<RepetitionRun> runs;
  EpochBand val_accuracy;
  EpochBand val_loss;
  EpochBand train_loss;
  metrics::RepetitionStats test_accuracy;
  /// Test-fold predictions of all repetitions pooled.
  Matrix pooled_probabilities;
  std::vector<std::size_t> pooled_labels;
  metrics::ConfusionMatrix confusion{kClassCount};
  metrics::MulticlassAuc auc;
};

/// Repetition r splits with seed base_seed + r, standardizes on its training
/// fold, trains with that same seed and evaluates on its test fold.
/// Repetitions run on `jobs` threads; results do not depend on jobs.
RepetitionReport run_repetitions(const LabeledCohort& cohort, const nn::TrainConfig& config,
                                 const RepetitionOptions& options);

EpochBand epoch_band(const std::vector<std::vector<double>>& curves);

}  // namespace keratoflow::classifier
