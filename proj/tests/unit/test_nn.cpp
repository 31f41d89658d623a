#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "keratoflow/error.hpp"
#include "keratoflow/nn/checkpoint.hpp"
#include "keratoflow/nn/gradcheck.hpp"
#include "keratoflow/nn/kernels.hpp"
#include "keratoflow/nn/loss.hpp"
#include "keratoflow/nn/network.hpp"
#include "keratoflow/nn/optimizer.hpp"
#include "oracles.hpp"

using namespace keratoflow;
using namespace keratoflow::nn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

DenseNetwork single(Matrix w, std::vector<double> b, Activation act) {
  return DenseNetwork({DenseLayer{std::move(w), std::move(b), act}});
}

LossResult sum_of_squares(const Matrix& out) {
  LossResult r{0.0, out};
  for (double v : out.values()) r.value += 0.5 * v * v;
  return r;
}

}  // namespace

TEST(Kernels, ParallelMatchesSerialBitForBit) {
  Rng rng(4);
  // Big enough to cross the parallel threshold.
  const Matrix a = random_matrix(300, 250, rng), b = random_matrix(280, 250, rng);
  const Matrix c = random_matrix(300, 280, rng);
  Matrix s(300, 280), p(300, 280);
  kernels::serial::matmul_nt(a, b, s);
  kernels::matmul_nt(a, b, p);
  EXPECT_EQ(s, p);
  Matrix s2(250, 280), p2(250, 280);
  kernels::serial::matmul_tn(a, c, s2);
  kernels::matmul_tn(a, c, p2);
  EXPECT_EQ(s2, p2);
  const Matrix d = random_matrix(280, 250, rng);
  Matrix s3(300, 250), p3(300, 250);
  kernels::serial::matmul_nn(c, d, s3);
  kernels::matmul_nn(c, d, p3);
  EXPECT_EQ(s3, p3);
}

TEST(Kernels, SmallProductsByHand) {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{5, 6}, {7, 8}};
  Matrix out(2, 2);
  kernels::matmul_nt(a, b, out);  // a * b^T
  EXPECT_EQ(out, (Matrix{{17, 23}, {39, 53}}));
  kernels::matmul_tn(a, b, out);  // a^T * b
  EXPECT_EQ(out, (Matrix{{26, 30}, {38, 44}}));
  kernels::matmul_nn(a, b, out);
  EXPECT_EQ(out, (Matrix{{19, 22}, {43, 50}}));
  EXPECT_THROW(kernels::matmul_nn(a, Matrix(3, 2), out), ShapeError);
}

TEST(Kernels, ParallelForRethrowsLowestIndexFailure) {
  std::vector<int> seen(20, 0);
  kernels::parallel_for(20, 4, [&](std::size_t i) { seen[i] = 1; });
  EXPECT_EQ(std::count(seen.begin(), seen.end(), 1), 20);
  try {
    kernels::parallel_for(20, 4, [](std::size_t i) {
      if (i == 7 || i == 13) throw ValidationError("fail " + std::to_string(i));
    });
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "fail 7");
  }
}

TEST(Forward, IdentityAndRelu) {
  const auto id = single(Matrix{{1, 0}, {0, 1}}, {0, 0}, Activation::linear);
  const Matrix x{{-1, 2}, {3, -4}};
  EXPECT_EQ(predict(id, x), x);
  const auto relu = single(Matrix{{1, 0}, {0, 1}}, {0, 0}, Activation::relu);
  EXPECT_EQ(predict(relu, Matrix{{-1, 2}}), (Matrix{{0, 2}}));
}

TEST(Forward, ClassifierArchitectureShape) {
  const std::vector<std::size_t> widths{29, 128, 256, 4};
  const auto net = DenseNetwork::create(widths, Activation::relu, Activation::linear, InitScheme::he, 1);
  Rng rng(1);
  const Matrix out = predict(net, random_matrix(5, 29, rng));
  EXPECT_EQ(out.rows(), 5u);
  EXPECT_EQ(out.cols(), 4u);
  EXPECT_THROW(predict(net, random_matrix(5, 28, rng)), ShapeError);
}

TEST(Network, ConstructorRejectsBrokenChain) {
  std::vector<DenseLayer> layers{{Matrix(3, 2), {0, 0, 0}, Activation::relu},
                                 {Matrix(1, 4), {0}, Activation::linear}};
  EXPECT_THROW(DenseNetwork{layers}, ShapeError);
}

TEST(Network, InitIsSeededAndActivationAware) {
  const std::vector<std::size_t> widths{10, 200, 200};
  const auto a = DenseNetwork::create(widths, Activation::relu, Activation::linear, InitScheme::he, 3);
  const auto b = DenseNetwork::create(widths, Activation::relu, Activation::linear, InitScheme::he, 3);
  EXPECT_TRUE(a.same_parameters(b));
  // He-uniform bound sqrt(6/fan_in) on the relu layer, Xavier on the linear one.
  double max0 = 0, max1 = 0;
  for (double v : a.layer(0).weights.values()) max0 = std::max(max0, std::abs(v));
  for (double v : a.layer(1).weights.values()) max1 = std::max(max1, std::abs(v));
  EXPECT_LE(max0, std::sqrt(6.0 / 10));
  EXPECT_GT(max0, 0.9 * std::sqrt(6.0 / 10));
  EXPECT_LE(max1, std::sqrt(6.0 / 400));
  EXPECT_GT(max1, 0.9 * std::sqrt(6.0 / 400));
}

TEST(Backward, StaleCacheIsContractViolation) {
  const std::vector<std::size_t> widths{3, 4, 2};
  auto net = DenseNetwork::create(widths, Activation::relu, Activation::linear, InitScheme::he, 1);
  const Matrix x{{1, 2, 3}};
  const auto cache = forward(net, x);
  const Matrix g(1, 2, 1.0);
  EXPECT_NO_THROW(backward(net, cache, g));
  net.mutable_layer(0).biases[0] += 1.0;
  EXPECT_THROW(backward(net, cache, g), ContractViolation);
  const auto other = DenseNetwork::create(widths, Activation::relu, Activation::linear, InitScheme::he, 2);
  EXPECT_THROW(backward(other, forward(net, x), g), ContractViolation);
  EXPECT_THROW(backward(net, forward(net, x), Matrix(1, 3)), ShapeError);
}

TEST(Backward, LinearInTheLossGradient) {
  const std::vector<std::size_t> widths{4, 8, 3};
  const auto net = DenseNetwork::create(widths, Activation::relu, Activation::linear, InitScheme::he, 5);
  Rng rng(5);
  const Matrix x = random_matrix(6, 4, rng);
  const auto cache = forward(net, x);
  const auto zero = backward(net, cache, Matrix(6, 3));
  EXPECT_EQ(zero.max_abs(), 0.0);
  Matrix g = random_matrix(6, 3, rng);
  const auto once = backward(net, cache, g);
  for (double& v : g.values()) v *= 2;
  const auto twice = backward(net, cache, g);
  const auto f1 = oracle::flatten(once), f2 = oracle::flatten(twice);
  for (std::size_t l = 0; l < f1.size(); ++l) {
    for (std::size_t i = 0; i < f1[l].size(); ++i) EXPECT_EQ(2 * f1[l][i], f2[l][i]);
  }
}

TEST(Backward, MatchesFiniteDifferencesOn4_8_3) {
  const std::vector<std::size_t> widths{4, 8, 3};
  const auto net = DenseNetwork::create(widths, Activation::relu, Activation::linear, InitScheme::he, 7);
  Rng rng(7);
  const Matrix x = random_matrix(5, 4, rng);
  const std::vector<std::size_t> labels{0, 2, 1, 1, 0};
  const auto analytic = backward(net, forward(net, x), softmax_cross_entropy(forward(net, x).output, labels).gradient);
  const auto numeric = oracle::central_differences(
      net, [&](const DenseNetwork& n) { return softmax_cross_entropy(predict(n, x), labels).value; }, 1e-5);
  EXPECT_LT(oracle::max_relative_error(oracle::flatten(analytic), numeric, 1e-8), 1e-4);
}

TEST(Backward, SoftmaxOutputLayer) {
  const std::vector<std::size_t> widths{3, 5, 4};
  const auto net = DenseNetwork::create(widths, Activation::relu, Activation::softmax, InitScheme::xavier, 8);
  Rng rng(8);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix target = random_matrix(4, 4, rng);
  auto loss = [&](const Matrix& out) { return half_squared_error(out, target); };
  const auto analytic = backward(net, forward(net, x), loss(forward(net, x).output).gradient);
  const auto numeric = oracle::central_differences(
      net, [&](const DenseNetwork& n) { return loss(predict(n, x)).value; }, 1e-5);
  EXPECT_LT(oracle::max_relative_error(oracle::flatten(analytic), numeric, 1e-8), 1e-4);
}

TEST(Loss, CrossEntropyExamples) {
  const Matrix uniform(2, 4, 0.0);
  const std::vector<std::size_t> labels{1, 3};
  EXPECT_NEAR(softmax_cross_entropy(uniform, labels).value, std::log(4.0), 1e-15);
  const std::vector<std::size_t> zero{0};
  const auto big = softmax_cross_entropy(Matrix{{1000, 0}}, zero);
  EXPECT_TRUE(std::isfinite(big.value));
  EXPECT_NEAR(big.value, 0.0, 1e-300);
  EXPECT_NEAR(softmax_cross_entropy(Matrix{{40, 0}}, zero).value, 0.0, 1e-15);
  const std::vector<std::size_t> bad{4};
  EXPECT_THROW(softmax_cross_entropy(Matrix(1, 4), bad), ValidationError);
  const auto wrong = softmax_cross_entropy(Matrix{{1000, 0}}, std::vector<std::size_t>{1});
  EXPECT_NEAR(wrong.value, 1000.0, 1e-9);
}

TEST(Loss, CrossEntropyGradientIsSoftmaxMinusOneHot) {
  const Matrix logits{{1, 2, 3}};
  const std::vector<std::size_t> labels{2};
  const auto r = softmax_cross_entropy(logits, labels);
  const Matrix p = softmax_rows(logits);
  EXPECT_NEAR(r.gradient(0, 0), p(0, 0), 1e-15);
  EXPECT_NEAR(r.gradient(0, 2), p(0, 2) - 1.0, 1e-15);
}

TEST(Optimizer, SgdStep) {
  std::vector<double> p{1.0}, g{0.5};
  sgd_update(p, g, 0.1);
  EXPECT_DOUBLE_EQ(p[0], 0.95);
  std::vector<double> zero{0.0};
  sgd_update(p, zero, 0.1);
  EXPECT_DOUBLE_EQ(p[0], 0.95);
}

TEST(Optimizer, FirstAdamStepIsLearningRateForAnyScale) {
  for (double scale : {1e-3, 1.0, 1e4}) {
    std::vector<double> p{0.0}, g{scale}, m{0.0}, v{0.0};
    adam_update(p, g, m, v, 1, 0.01, AdamParams{});
    // m_hat = g, v_hat = g^2, step = lr * g / (|g| + eps)
    EXPECT_NEAR(p[0], -0.01 * scale / (scale + 1e-8), 1e-15);
    EXPECT_NEAR(std::abs(p[0]), 0.01, 1e-7);
  }
}

TEST(Optimizer, NonFiniteGradientAbortsWithEpochAndLayer) {
  const std::vector<std::size_t> widths{2, 3, 2};
  auto net = DenseNetwork::create(widths, Activation::relu, Activation::linear, InitScheme::he, 1);
  const auto before = net;
  auto grads = Gradients::zeros_like(net);
  grads.layers[1].biases[0] = std::nan("");
  auto state = OptimizerState::for_network(net);
  try {
    optimizer_step(net, grads, state, TrainConfig{}, 17);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.epoch(), 17);
    EXPECT_EQ(e.layer(), 1);
  }
  EXPECT_TRUE(net.same_parameters(before));
}

TEST(Optimizer, ConfigValidation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epochs = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = TrainConfig{};
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_EQ(optimizer_from_string("sgd"), OptimizerKind::sgd);
  EXPECT_THROW(optimizer_from_string("rmsprop"), ValidationError);
}

TEST(GradCheck, FreshNetPasses) {
  const std::vector<std::size_t> widths{4, 8, 3};
  const auto net = DenseNetwork::create(widths, Activation::relu, Activation::linear, InitScheme::he, 11);
  Rng rng(11);
  const Matrix x = random_matrix(6, 4, rng);
  const std::vector<std::size_t> labels{0, 1, 2, 0, 1, 2};
  const auto report = grad_check(
      net, x, [&](const Matrix& out) { return softmax_cross_entropy(out, labels); }, 1e-4);
  EXPECT_TRUE(report.passed) << report.worst;
  EXPECT_EQ(report.max_relative_error.size(), 2u);
}

TEST(GradCheck, QuadraticLossOnLinearNetIsExact) {
  const auto net = single(Matrix{{0.5, -1.0}, {2.0, 0.25}}, {0.1, -0.2}, Activation::linear);
  const Matrix x{{1.0, 2.0}, {-0.5, 0.75}};
  const auto report = grad_check(net, x, sum_of_squares, 1e-8);
  EXPECT_TRUE(report.passed) << report.worst;
}

TEST(GradCheck, CorruptedGradientFails) {
  const std::vector<std::size_t> widths{4, 8, 3};
  const auto net = DenseNetwork::create(widths, Activation::relu, Activation::linear, InitScheme::he, 12);
  Rng rng(12);
  const Matrix x = random_matrix(5, 4, rng);
  auto analytic = backward(net, forward(net, x), sum_of_squares(predict(net, x)).gradient);
  const auto numeric = numeric_gradients(net, x, sum_of_squares);
  EXPECT_TRUE(compare_gradients(analytic, numeric, 1e-4).passed);
  analytic.scale(1.01);
  EXPECT_FALSE(compare_gradients(analytic, numeric, 1e-4).passed);
}

TEST(Checkpoint, RoundTripIsExact) {
  const std::vector<std::size_t> widths{5, 7, 3};
  const auto net = DenseNetwork::create(widths, Activation::relu, Activation::softmax, InitScheme::he, 4);
  const auto doc = network_to_json(net);
  const auto back = network_from_json(nlohmann::json::parse(doc.dump()));
  EXPECT_TRUE(back.same_parameters(net));
  EXPECT_EQ(back.layer(1).activation, Activation::softmax);
  auto broken = doc;
  broken["layers"][0]["weights"].erase(0);
  EXPECT_THROW(network_from_json(broken), ValidationError);
}
