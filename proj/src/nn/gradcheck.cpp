#include "keratoflow/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "keratoflow/error.hpp"

namespace keratoflow::nn {

double relative_error(double analytic, double numeric) noexcept {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

Gradients numeric_gradients(const DenseNetwork& net, const Matrix& input, const OutputLoss& loss,
                            double step) {
  Gradients numeric = Gradients::zeros_like(net);
  DenseNetwork probe = net;
  auto evaluate = [&]() { return loss(predict(probe, input)).value; };
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    auto& g = numeric.layers[i];
    for (std::size_t k = 0; k < g.weights.size(); ++k) {
      double& p = probe.mutable_layer(i).weights.data()[k];
      const double original = p;
      p = original + step;
      const double plus = evaluate();
      p = original - step;
      const double minus = evaluate();
      p = original;
      g.weights.data()[k] = (plus - minus) / (2.0 * step);
    }
    for (std::size_t k = 0; k < g.biases.size(); ++k) {
      double& p = probe.mutable_layer(i).biases[k];
      const double original = p;
      p = original + step;
      const double plus = evaluate();
      p = original - step;
      const double minus = evaluate();
      p = original;
      g.biases[k] = (plus - minus) / (2.0 * step);
    }
  }
  return numeric;
}

GradCheckReport compare_gradients(const Gradients& analytic, const Gradients& numeric,
                                  double tolerance) {
  if (analytic.layers.size() != numeric.layers.size()) {
    throw ShapeError("compare_gradients: layer counts differ");
  }
  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t i = 0; i < analytic.layers.size(); ++i) {
    const auto& a = analytic.layers[i];
    const auto& n = numeric.layers[i];
    if (a.weights.size() != n.weights.size() || a.biases.size() != n.biases.size()) {
      throw ShapeError("compare_gradients: shapes differ at layer " + std::to_string(i));
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < a.weights.size(); ++k) {
      worst = std::max(worst, relative_error(a.weights.data()[k], n.weights.data()[k]));
    }
    for (std::size_t k = 0; k < a.biases.size(); ++k) {
      worst = std::max(worst, relative_error(a.biases[k], n.biases[k]));
    }
    report.max_relative_error.push_back(worst);
    report.worst = std::max(report.worst, worst);
  }
  report.passed = report.worst < tolerance;
  return report;
}

GradCheckReport grad_check(const DenseNetwork& net, const Matrix& input, const OutputLoss& loss,
                           double tolerance, double step) {
  const ForwardCache cache = forward(net, input);
  const LossResult l = loss(cache.output);
  const Gradients analytic = backward(net, cache, l.gradient);
  return compare_gradients(analytic, numeric_gradients(net, input, loss, step), tolerance);
}

}  // namespace keratoflow::nn
