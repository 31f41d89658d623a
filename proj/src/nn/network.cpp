#include "keratoflow/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "keratoflow/error.hpp"
#include "keratoflow/nn/kernels.hpp"
#include "keratoflow/random.hpp"

namespace keratoflow::nn {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
    case Activation::softmax: return "softmax";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "linear") return Activation::linear;
  if (name == "softmax") return Activation::softmax;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(InitScheme scheme) {
  return scheme == InitScheme::he ? "he" : "xavier";
}

InitScheme init_scheme_from_string(std::string_view name) {
  if (name == "he") return InitScheme::he;
  if (name == "xavier") return InitScheme::xavier;
  throw ValidationError("unknown init scheme '" + std::string(name) + "'");
}

DenseNetwork::DenseNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.biases.size() != l.out_dim()) {
      throw ShapeError("layer " + std::to_string(i) + ": " + std::to_string(l.biases.size()) +
                       " biases for " + std::to_string(l.out_dim()) + " outputs");
    }
    if (i > 0 && layers_[i - 1].out_dim() != l.in_dim()) {
      throw ShapeError("layer " + std::to_string(i) + " expects " + std::to_string(l.in_dim()) +
                       " inputs but layer " + std::to_string(i - 1) + " produces " +
                       std::to_string(layers_[i - 1].out_dim()));
    }
  }
}

DenseNetwork DenseNetwork::create(std::span<const std::size_t> widths, Activation hidden,
                                  Activation output, InitScheme init, std::uint64_t seed) {
  if (widths.size() < 2) throw ShapeError("a network needs at least an input and output width");
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t fan_in = widths[i];
    const std::size_t fan_out = widths[i + 1];
    if (fan_in == 0 || fan_out == 0) throw ShapeError("zero-width layer");
    DenseLayer layer;
    layer.activation = (i + 2 == widths.size()) ? output : hidden;
    const bool he = init == InitScheme::he && layer.activation == Activation::relu;
    const double limit = he ? std::sqrt(6.0 / static_cast<double>(fan_in))
                            : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    layer.weights = Matrix(fan_out, fan_in);
    for (double& w : layer.weights.values()) w = rng.uniform(-limit, limit);
    layer.biases.assign(fan_out, 0.0);
    layers.push_back(std::move(layer));
  }
  return DenseNetwork(std::move(layers));
}

DenseLayer& DenseNetwork::mutable_layer(std::size_t i) {
  ++revision_;
  return layers_.at(i);
}

std::size_t DenseNetwork::in_dim() const noexcept {
  return layers_.empty() ? 0 : layers_.front().in_dim();
}

std::size_t DenseNetwork::out_dim() const noexcept {
  return layers_.empty() ? 0 : layers_.back().out_dim();
}

std::size_t DenseNetwork::parameter_count() const noexcept {
  std::size_t total = 0;
  for (const auto& l : layers_) total += l.parameter_count();
  return total;
}

std::vector<std::size_t> DenseNetwork::widths() const {
  std::vector<std::size_t> w;
  if (layers_.empty()) return w;
  w.push_back(in_dim());
  for (const auto& l : layers_) w.push_back(l.out_dim());
  return w;
}

bool DenseNetwork::all_finite() const noexcept {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(layers_.begin(), layers_.end(), [&](const DenseLayer& l) {
    return std::all_of(l.weights.values().begin(), l.weights.values().end(), finite) &&
           std::all_of(l.biases.begin(), l.biases.end(), finite);
  });
}

bool DenseNetwork::same_parameters(const DenseNetwork& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& a = layers_[i];
    const auto& b = other.layers_[i];
    if (a.activation != b.activation || !(a.weights == b.weights) || a.biases != b.biases) {
      return false;
    }
  }
  return true;
}

Gradients Gradients::zeros_like(const DenseNetwork& net) {
  Gradients g;
  for (const auto& l : net.layers()) {
    g.layers.push_back({Matrix(l.out_dim(), l.in_dim()), std::vector<double>(l.out_dim(), 0.0)});
  }
  return g;
}

void Gradients::scale(double factor) {
  for (auto& l : layers) {
    for (double& v : l.weights.values()) v *= factor;
    for (double& v : l.biases) v *= factor;
  }
  for (double& v : input.values()) v *= factor;
}

double Gradients::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& l : layers) {
    for (double v : l.weights.values()) m = std::max(m, std::abs(v));
    for (double v : l.biases) m = std::max(m, std::abs(v));
  }
  return m;
}

namespace {

void apply_activation(Activation activation, const Matrix& pre, Matrix& out) {
  switch (activation) {
    case Activation::linear:
      out = pre;
      return;
    case Activation::relu:
      out = pre;
      for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::softmax:
      out = softmax_rows(pre);
      return;
  }
}

void check_input(const DenseNetwork& net, const Matrix& batch) {
  if (net.layer_count() == 0) throw ShapeError("forward on an empty network");
  if (batch.cols() != net.in_dim()) {
    throw ShapeError("layer 0 expects " + std::to_string(net.in_dim()) + " inputs, got batch " +
                     batch.shape_string());
  }
}

}  // namespace

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto in = logits.row(r);
    auto o = out.row(r);
    const double shift = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      o[c] = std::exp(in[c] - shift);
      total += o[c];
    }
    for (double& v : o) v /= total;
  }
  return out;
}

ForwardCache forward(const DenseNetwork& net, const Matrix& batch) {
  check_input(net, batch);
  ForwardCache cache;
  cache.network = &net;
  cache.revision = net.revision();
  cache.inputs.reserve(net.layer_count());
  cache.pre_activations.reserve(net.layer_count());
  Matrix current = batch;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const auto& layer = net.layer(i);
    Matrix pre;
    kernels::matmul_nt(current, layer.weights, pre);
    kernels::add_row_vector(pre, layer.biases);
    Matrix activated;
    apply_activation(layer.activation, pre, activated);
    cache.inputs.push_back(std::move(current));
    cache.pre_activations.push_back(std::move(pre));
    current = std::move(activated);
  }
  cache.output = std::move(current);
  return cache;
}

Matrix predict(const DenseNetwork& net, const Matrix& batch) {
  check_input(net, batch);
  Matrix current = batch;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const auto& layer = net.layer(i);
    Matrix pre;
    kernels::matmul_nt(current, layer.weights, pre);
    kernels::add_row_vector(pre, layer.biases);
    apply_activation(layer.activation, pre, current);
  }
  return current;
}

Gradients backward(const DenseNetwork& net, const ForwardCache& cache,
                   const Matrix& output_gradient) {
  if (cache.network != &net || cache.revision != net.revision() ||
      cache.inputs.size() != net.layer_count() ||
      cache.pre_activations.size() != net.layer_count()) {
    throw ContractViolation("backward called with a forward cache from another network or an "
                            "earlier parameter revision");
  }
  if (output_gradient.rows() != cache.output.rows() ||
      output_gradient.cols() != cache.output.cols()) {
    throw ShapeError("output gradient " + output_gradient.shape_string() +
                     " does not match network output " + cache.output.shape_string());
  }

  Gradients grads;
  grads.layers.resize(net.layer_count());
  Matrix upstream = output_gradient;
  for (std::size_t idx = net.layer_count(); idx-- > 0;) {
    const auto& layer = net.layer(idx);
    const Matrix& pre = cache.pre_activations[idx];
    Matrix delta = upstream;
    switch (layer.activation) {
      case Activation::linear:
        break;
      case Activation::relu:
        for (std::size_t k = 0; k < delta.size(); ++k) {
          if (!(pre.data()[k] > 0.0)) delta.data()[k] = 0.0;
        }
        break;
      case Activation::softmax: {
        const Matrix s = softmax_rows(pre);
        for (std::size_t r = 0; r < delta.rows(); ++r) {
          auto d = delta.row(r);
          const auto sr = s.row(r);
          double inner = 0.0;
          for (std::size_t c = 0; c < d.size(); ++c) inner += d[c] * sr[c];
          for (std::size_t c = 0; c < d.size(); ++c) d[c] = sr[c] * (d[c] - inner);
        }
        break;
      }
    }
    auto& g = grads.layers[idx];
    kernels::matmul_tn(delta, cache.inputs[idx], g.weights);
    g.biases.assign(layer.out_dim(), 0.0);
    kernels::column_sums(delta, g.biases);
    Matrix downstream;
    kernels::matmul_nn(delta, layer.weights, downstream);
    upstream = std::move(downstream);
  }
  grads.input = std::move(upstream);
  return grads;
}

}  // namespace keratoflow::nn
