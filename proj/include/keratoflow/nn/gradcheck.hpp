#pragma once

#include <functional>
#include <vector>

#include "keratoflow/matrix.hpp"
#include "keratoflow/nn/loss.hpp"
#include "keratoflow/nn/network.hpp"

namespace keratoflow::nn {

/// Scalar loss of the network output, with its gradient.
using OutputLoss = std::function<LossResult(const Matrix& output)>;

struct GradCheckReport {
  std::vector<double> max_relative_error;  // per layer
  double worst = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric) noexcept;

/// Central differences of loss(forward(net, input)) with step h, for every
/// weight and bias.
Gradients numeric_gradients(const DenseNetwork& net, const Matrix& input, const OutputLoss& loss,
                            double step = 1e-5);

GradCheckReport compare_gradients(const Gradients& analytic, const Gradients& numeric,
                                  double tolerance);

/// Analytic backprop against central differences.
GradCheckReport grad_check(const DenseNetwork& net, const Matrix& input, const OutputLoss& loss,
                           double tolerance, double step = 1e-5);

}  // namespace keratoflow::nn
