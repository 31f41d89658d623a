#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "keratoflow/matrix.hpp"
#include "keratoflow/nn/network.hpp"

namespace keratoflow::nn {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  OptimizerKind optimizer = OptimizerKind::adam;
  AdamParams adam;
  std::uint64_t seed = 0;
  InitScheme init = InitScheme::he;

  /// Throws ValidationError on epochs == 0, batch_size == 0, lr <= 0 or
  /// Adam betas outside [0, 1).
  void validate() const;
};

/// p <- p - lr * g
void sgd_update(std::span<double> params, std::span<const double> grads, double learning_rate);

/// Bias-corrected Adam update; `step` is the 1-based step count after this update.
void adam_update(std::span<double> params, std::span<const double> grads,
                 std::span<double> first_moment, std::span<double> second_moment,
                 std::uint64_t step, double learning_rate, const AdamParams& adam);

/// Adam moments for every parameter of a network (unused under SGD).
struct OptimizerState {
  std::vector<Matrix> weight_m, weight_v;
  std::vector<std::vector<double>> bias_m, bias_v;
  std::uint64_t step = 0;

  static OptimizerState for_network(const DenseNetwork& net);
};

/// Applies one update to every layer of `net`. A non-finite gradient aborts
/// with TrainingError naming `epoch` and the layer, before anything changes.
void optimizer_step(DenseNetwork& net, const Gradients& grads, OptimizerState& state,
                    const TrainConfig& config, std::size_t epoch);

}  // namespace keratoflow::nn
