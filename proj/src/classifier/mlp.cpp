#include "keratoflow/classifier/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "keratoflow/error.hpp"
#include "keratoflow/nn/checkpoint.hpp"
#include "keratoflow/nn/kernels.hpp"
#include "keratoflow/nn/loss.hpp"
#include "keratoflow/random.hpp"

namespace keratoflow::classifier {

namespace {

// Generator streams derived from TrainConfig::seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kShuffleStream = 1;

void check_set(const LabeledSet& set, const char* name) {
  if (set.size() == 0) throw ValidationError(std::string(name) + " set is empty");
  if (set.features.rows() != set.labels.size()) {
    throw ShapeError(std::string(name) + " set has " + std::to_string(set.features.rows()) +
                     " rows but " + std::to_string(set.labels.size()) + " labels");
  }
  if (set.features.cols() != domain::kFeatureCount) {
    throw ShapeError(std::string(name) + " features must be 29 wide, got " +
                     set.features.shape_string());
  }
  for (auto label : set.labels) {
    if (label >= kClassCount) {
      throw ValidationError(std::string(name) + " set has label index " + std::to_string(label) +
                            " outside 0-3");
    }
  }
}

std::vector<std::size_t> argmax_rows(const Matrix& m) {
  std::vector<std::size_t> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace

nlohmann::json MlpModel::to_json() const {
  return {{"schema_version", schema_version},
          {"network", nn::network_to_json(network)},
          {"feature_stats", feature_stats.to_json()}};
}

MlpModel MlpModel::from_json(const nlohmann::json& doc) {
  try {
    MlpModel m;
    m.schema_version = doc.at("schema_version").get<int>();
    m.network = nn::network_from_json(doc.at("network"));
    m.feature_stats = domain::FeatureStats::from_json(doc.at("feature_stats"));
    if (m.network.in_dim() != domain::kFeatureCount || m.network.out_dim() != kClassCount) {
      throw ValidationError("MLP checkpoint must map 29 inputs to 4 outputs");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed MLP checkpoint: ") + e.what());
  }
}

Evaluation evaluate(const nn::DenseNetwork& network, const LabeledSet& data) {
  const Matrix logits = nn::predict(network, data.features);
  const auto loss = nn::softmax_cross_entropy(logits, data.labels);
  const auto predicted = argmax_rows(logits);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == data.labels[i];
  return {loss.value, static_cast<double>(hits) / static_cast<double>(data.size())};
}

TrainedMlp train_mlp(const LabeledSet& train, const LabeledSet& validation,
                     const domain::FeatureStats& stats, const nn::TrainConfig& config,
                     const MlpOptions& options) {
  config.validate();
  check_set(train, "training");
  check_set(validation, "validation");

  std::vector<std::size_t> widths{domain::kFeatureCount};
  widths.insert(widths.end(), options.hidden.begin(), options.hidden.end());
  widths.push_back(kClassCount);

  TrainedMlp out;
  out.model.feature_stats = stats;
  auto& net = out.model.network;
  net = nn::DenseNetwork::create(widths, nn::Activation::relu, nn::Activation::linear, config.init,
                                 derive_seed(config.seed, kInitStream));
  auto state = nn::OptimizerState::for_network(net);
  Rng shuffle_rng(config.seed, kShuffleStream);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> batch_rows;
  std::vector<std::size_t> batch_labels;
  std::vector<std::size_t> batch_sources;

  nn::DenseNetwork best_network;
  double best_accuracy = -1.0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle_rng.below(i + 1)]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(end));
      batch_labels.clear();
      batch_sources.clear();
      for (auto row : batch_rows) {
        batch_labels.push_back(train.labels[row]);
        if (!train.source_index.empty()) batch_sources.push_back(train.source_index[row]);
      }
      if (options.batch_observer) options.batch_observer(batch_sources);

      const Matrix inputs = train.features.select_rows(batch_rows);
      const auto cache = nn::forward(net, inputs);
      const auto loss = nn::softmax_cross_entropy(cache.output, batch_labels);
      if (!std::isfinite(loss.value)) {
        throw TrainingError("non-finite training loss", static_cast<long>(epoch), -1);
      }
      loss_sum += loss.value * static_cast<double>(batch_rows.size());
      const auto grads = nn::backward(net, cache, loss.gradient);
      nn::optimizer_step(net, grads, state, config, epoch);
    }
    out.history.train_loss.push_back(loss_sum / static_cast<double>(order.size()));
    const Evaluation val = evaluate(net, validation);
    out.history.val_loss.push_back(val.loss);
    out.history.val_accuracy.push_back(val.accuracy);
    if (options.select_best_validation && val.accuracy > best_accuracy) {
      best_accuracy = val.accuracy;
      best_network = net;
    }
  }
  if (options.select_best_validation) net = std::move(best_network);
  return out;
}

std::array<double, kClassCount> predict_proba(const MlpModel& model,
                                              const domain::FeatureVector& features) {
  Matrix input(1, domain::kFeatureCount);
  std::copy(features.values.begin(), features.values.end(), input.row(0).begin());
  const Matrix probs = predict_proba(model, input);
  std::array<double, kClassCount> out{};
  std::copy(probs.row(0).begin(), probs.row(0).end(), out.begin());
  return out;
}

Matrix predict_proba(const MlpModel& model, const Matrix& standardized) {
  if (model.network.out_dim() != kClassCount) throw ShapeError("MLP must have 4 outputs");
  return nn::softmax_rows(nn::predict(model.network, standardized));
}

EpochBand epoch_band(const std::vector<std::vector<double>>& curves) {
  EpochBand band;
  if (curves.empty()) return band;
  const std::size_t epochs = curves.front().size();
  const double n = static_cast<double>(curves.size());
  band.mean.assign(epochs, 0.0);
  band.variance.assign(epochs, 0.0);
  for (const auto& c : curves) {
    if (c.size() != epochs) throw ShapeError("epoch curves differ in length");
    for (std::size_t e = 0; e < epochs; ++e) band.mean[e] += c[e];
  }
  for (double& m : band.mean) m /= n;
  if (curves.size() > 1) {
    for (const auto& c : curves) {
      for (std::size_t e = 0; e < epochs; ++e) {
        const double d = c[e] - band.mean[e];
        band.variance[e] += d * d;
      }
    }
    for (double& v : band.variance) v /= (n - 1.0);
  }
  return band;
}

RepetitionReport run_repetitions(const LabeledCohort& cohort, const nn::TrainConfig& config,
                                 const RepetitionOptions& options) {
  if (options.repetitions < 1) throw ValidationError("repetitions must be at least 1");
  config.validate();
  const std::size_t n = cohort.raw_features.rows();
  if (cohort.labels.size() != n) throw ShapeError("cohort labels and features differ in length");

  RepetitionReport report;
  report.runs.resize(options.repetitions);

  auto make_set = [&](const std::vector<std::size_t>& indices, const domain::FeatureStats& stats) {
    LabeledSet set;
    set.features = stats.apply(cohort.raw_features.select_rows(indices));
    set.source_index = indices;
    for (auto i : indices) set.labels.push_back(cohort.labels[i]);
    return set;
  };

  nn::kernels::parallel_for(options.repetitions, options.jobs, [&](std::size_t r) {
    RepetitionRun& run = report.runs[r];
    run.seed = options.base_seed + r;
    run.split = domain::split_dataset(n, run.seed);
    const auto stats = domain::fit_standardization(cohort.raw_features.select_rows(run.split.train));
    const LabeledSet train = make_set(run.split.train, stats);
    const LabeledSet val = make_set(run.split.validation, stats);
    const LabeledSet test = make_set(run.split.test, stats);

    nn::TrainConfig rep_config = config;
    rep_config.seed = run.seed;
    MlpOptions mlp = options.mlp;
    if (options.batch_observer) {
      mlp.batch_observer = [&, r](std::span<const std::size_t> sources) {
        options.batch_observer(r, sources);
      };
    }
    auto trained = train_mlp(train, val, stats, rep_config, mlp);
    run.history = std::move(trained.history);
    run.model = std::move(trained.model);
    run.test_probabilities = predict_proba(run.model, test.features);
    run.test_labels = test.labels;
    const auto predicted = argmax_rows(run.test_probabilities);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == test.labels[i];
    run.test_accuracy = static_cast<double>(hits) / static_cast<double>(test.size());
  });

  std::vector<std::vector<double>> val_acc, val_loss, train_loss;
  std::vector<double> test_acc;
  std::size_t pooled_rows = 0;
  for (const auto& run : report.runs) {
    val_acc.push_back(run.history.val_accuracy);
    val_loss.push_back(run.history.val_loss);
    train_loss.push_back(run.history.train_loss);
    test_acc.push_back(run.test_accuracy);
    pooled_rows += run.test_labels.size();
  }
  report.val_accuracy = epoch_band(val_acc);
  report.val_loss = epoch_band(val_loss);
  report.train_loss = epoch_band(train_loss);
  report.test_accuracy = metrics::repetition_stats(test_acc);

  report.pooled_probabilities = Matrix(pooled_rows, kClassCount);
  std::size_t row = 0;
  for (const auto& run : report.runs) {
    for (std::size_t i = 0; i < run.test_labels.size(); ++i, ++row) {
      std::copy(run.test_probabilities.row(i).begin(), run.test_probabilities.row(i).end(),
                report.pooled_probabilities.row(row).begin());
      report.pooled_labels.push_back(run.test_labels[i]);
    }
  }
  report.confusion = metrics::confusion_matrix(
      report.pooled_labels, argmax_rows(report.pooled_probabilities), kClassCount);
  report.auc = metrics::multiclass_auc(report.pooled_probabilities, report.pooled_labels);
  return report;
}

}  // namespace keratoflow::classifier
