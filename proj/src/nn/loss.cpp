#include "keratoflow/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "keratoflow/error.hpp"

namespace keratoflow::nn {

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels) {
  if (labels.size() != logits.rows()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  if (logits.rows() == 0) throw ValidationError("softmax_cross_entropy: empty batch");
  const std::size_t classes = logits.cols();
  const double batch = static_cast<double>(logits.rows());
  LossResult result;
  result.gradient = Matrix(logits.rows(), classes);
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (labels[r] >= classes) {
      throw ValidationError("label " + std::to_string(labels[r]) + " out of range for " +
                            std::to_string(classes) + " classes");
    }
    const auto z = logits.row(r);
    const double shift = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - shift);
    const double log_norm = shift + std::log(sum);
    total += log_norm - z[labels[r]];
    auto g = result.gradient.row(r);
    for (std::size_t c = 0; c < classes; ++c) {
      g[c] = (std::exp(z[c] - log_norm) - (c == labels[r] ? 1.0 : 0.0)) / batch;
    }
  }
  result.value = total / batch;
  return result;
}

LossResult half_squared_error(const Matrix& prediction, const Matrix& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
    throw ShapeError("half_squared_error: " + prediction.shape_string() + " vs " +
                     target.shape_string());
  }
  if (prediction.rows() == 0) throw ValidationError("half_squared_error: empty batch");
  const double batch = static_cast<double>(prediction.rows());
  LossResult result;
  result.gradient = Matrix(prediction.rows(), prediction.cols());
  double total = 0.0;
  for (std::size_t k = 0; k < prediction.size(); ++k) {
    const double diff = prediction.data()[k] - target.data()[k];
    total += 0.5 * diff * diff;
    result.gradient.data()[k] = diff / batch;
  }
  result.value = total / batch;
  return result;
}

}  // namespace keratoflow::nn
