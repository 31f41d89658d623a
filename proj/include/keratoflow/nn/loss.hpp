#pragma once

#include <cstddef>
#include <span>

#include "keratoflow/matrix.hpp"

namespace keratoflow::nn {

struct LossResult {
  double value = 0.0;
  Matrix gradient;  // d value / d input, same shape as the input
};

/// Mean over the batch of -log softmax(logits)[label], computed with
/// log-sum-exp. gradient = (softmax - onehot) / batch.
/// Labels outside [0, logits.cols()) throw ValidationError.
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels);

/// 0.5 * sum (prediction - target)^2 / batch.
LossResult half_squared_error(const Matrix& prediction, const Matrix& target);

}  // namespace keratoflow::nn
