#include "keratoflow/nn/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "keratoflow/error.hpp"

namespace keratoflow::nn {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ValidationError("unknown optimizer '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be positive and finite");
  }
  if (optimizer == OptimizerKind::adam) {
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
      throw ValidationError("Adam betas must lie in [0, 1)");
    }
    if (!(adam.epsilon > 0.0)) throw ValidationError("Adam epsilon must be positive");
  }
}

void sgd_update(std::span<double> params, std::span<const double> grads, double learning_rate) {
  if (params.size() != grads.size()) throw ShapeError("sgd_update: parameter/gradient mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate * grads[i];
}

void adam_update(std::span<double> params, std::span<const double> grads,
                 std::span<double> first_moment, std::span<double> second_moment,
                 std::uint64_t step, double learning_rate, const AdamParams& adam) {
  if (params.size() != grads.size() || params.size() != first_moment.size() ||
      params.size() != second_moment.size()) {
    throw ShapeError("adam_update: parameter/gradient/state mismatch");
  }
  if (step == 0) throw ValidationError("adam_update: step counts from 1");
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(adam.beta1, t);
  const double correction2 = 1.0 - std::pow(adam.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first_moment[i] = adam.beta1 * first_moment[i] + (1.0 - adam.beta1) * g;
    second_moment[i] = adam.beta2 * second_moment[i] + (1.0 - adam.beta2) * g * g;
    const double m_hat = first_moment[i] / correction1;
    const double v_hat = second_moment[i] / correction2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + adam.epsilon);
  }
}

OptimizerState OptimizerState::for_network(const DenseNetwork& net) {
  OptimizerState s;
  for (const auto& l : net.layers()) {
    s.weight_m.emplace_back(l.out_dim(), l.in_dim());
    s.weight_v.emplace_back(l.out_dim(), l.in_dim());
    s.bias_m.emplace_back(l.out_dim(), 0.0);
    s.bias_v.emplace_back(l.out_dim(), 0.0);
  }
  return s;
}

void optimizer_step(DenseNetwork& net, const Gradients& grads, OptimizerState& state,
                    const TrainConfig& config, std::size_t epoch) {
  if (grads.layers.size() != net.layer_count()) {
    throw ShapeError("optimizer_step: " + std::to_string(grads.layers.size()) +
                     " gradient layers for a " + std::to_string(net.layer_count()) +
                     "-layer network");
  }
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const auto& layer = net.layer(i);
    const auto& g = grads.layers[i];
    if (g.weights.rows() != layer.out_dim() || g.weights.cols() != layer.in_dim() ||
        g.biases.size() != layer.out_dim()) {
      throw ShapeError("optimizer_step: gradient shape mismatch at layer " + std::to_string(i));
    }
    auto finite = [](double v) { return std::isfinite(v); };
    const bool ok = std::all_of(g.weights.values().begin(), g.weights.values().end(), finite) &&
                    std::all_of(g.biases.begin(), g.biases.end(), finite);
    if (!ok) {
      throw TrainingError("non-finite gradient", static_cast<long>(epoch), static_cast<long>(i));
    }
  }

  const bool adam = config.optimizer == OptimizerKind::adam;
  if (adam) {
    if (state.weight_m.size() != net.layer_count()) {
      throw ShapeError("optimizer_step: optimizer state does not match the network");
    }
    ++state.step;
  }
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    auto& layer = net.mutable_layer(i);
    const auto& g = grads.layers[i];
    if (adam) {
      adam_update(layer.weights.values(), g.weights.values(), state.weight_m[i].values(),
                  state.weight_v[i].values(), state.step, config.learning_rate, config.adam);
      adam_update(layer.biases, g.biases, state.bias_m[i], state.bias_v[i], state.step,
                  config.learning_rate, config.adam);
    } else {
      sgd_update(layer.weights.values(), g.weights.values(), config.learning_rate);
      sgd_update(layer.biases, g.biases, config.learning_rate);
    }
  }
  if (!net.all_finite()) {
    throw TrainingError("parameters became non-finite after update", static_cast<long>(epoch), -1);
  }
}

}  // namespace keratoflow::nn
