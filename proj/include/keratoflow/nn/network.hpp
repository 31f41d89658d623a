#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "keratoflow/matrix.hpp"

namespace keratoflow::nn {

enum class Activation { relu, linear, softmax };

std::string_view to_string(Activation activation);
Activation activation_from_string(std::string_view name);

/// Weight initialization. `he` is activation-aware: He-uniform on ReLU
/// layers and Xavier-uniform on linear/softmax layers. `xavier` applies
/// Xavier-uniform everywhere.
enum class InitScheme { he, xavier };

std::string_view to_string(InitScheme scheme);
InitScheme init_scheme_from_string(std::string_view name);

/// One affine map followed by an activation: y = g(x W^T + b).
struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> biases;
  Activation activation = Activation::linear;

  std::size_t in_dim() const noexcept { return weights.cols(); }
  std::size_t out_dim() const noexcept { return weights.rows(); }
  std::size_t parameter_count() const noexcept { return weights.size() + biases.size(); }
};

class DenseNetwork {
 public:
  DenseNetwork() = default;
  /// Throws ShapeError if adjacent layers do not chain.
  explicit DenseNetwork(std::vector<DenseLayer> layers);

  /// Builds a network with the given widths (input first). Hidden layers use
  /// `hidden`, the last layer uses `output`.
  static DenseNetwork create(std::span<const std::size_t> widths, Activation hidden,
                             Activation output, InitScheme init, std::uint64_t seed);

  std::size_t layer_count() const noexcept { return layers_.size(); }
  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
  std::span<const DenseLayer> layers() const noexcept { return layers_; }

  /// Mutable access bumps the revision so outstanding forward caches go stale.
  DenseLayer& mutable_layer(std::size_t i);

  std::size_t in_dim() const noexcept;
  std::size_t out_dim() const noexcept;
  std::size_t parameter_count() const noexcept;
  std::vector<std::size_t> widths() const;

  std::uint64_t revision() const noexcept { return revision_; }
  void touch() noexcept { ++revision_; }

  /// True if every weight and bias is finite.
  bool all_finite() const noexcept;

  /// Parameters compare equal; revision is ignored.
  bool same_parameters(const DenseNetwork& other) const;

 private:
  std::vector<DenseLayer> layers_;
  std::uint64_t revision_ = 0;
};

/// Per-layer activations kept by forward() for backward().
struct ForwardCache {
  std::vector<Matrix> inputs;           // input to layer i
  std::vector<Matrix> pre_activations;  // x W^T + b of layer i
  Matrix output;
  const DenseNetwork* network = nullptr;
  std::uint64_t revision = 0;
};

/// Gradients of one layer, shaped like the layer.
struct LayerGradient {
  Matrix weights;
  std::vector<double> biases;
};

struct Gradients {
  std::vector<LayerGradient> layers;
  Matrix input;  // d loss / d network input

  /// Zero gradients shaped like `net`.
  static Gradients zeros_like(const DenseNetwork& net);
  void scale(double factor);
  /// Largest |value| over all parameter gradients.
  double max_abs() const noexcept;
};

ForwardCache forward(const DenseNetwork& net, const Matrix& batch);

/// Forward pass without keeping intermediates.
Matrix predict(const DenseNetwork& net, const Matrix& batch);

/// Reverse-mode pass. `output_gradient` is d loss / d output (same shape as
/// cache.output). Throws ContractViolation if `cache` did not come from
/// forward() on this network at its current revision.
Gradients backward(const DenseNetwork& net, const ForwardCache& cache,
                   const Matrix& output_gradient);

/// Row-wise softmax, max-shifted.
Matrix softmax_rows(const Matrix& logits);

}  // namespace keratoflow::nn
