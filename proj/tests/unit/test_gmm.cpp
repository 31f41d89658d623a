#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "keratoflow/error.hpp"
#include "keratoflow/gmm/gmm.hpp"
#include "keratoflow/metrics/metrics.hpp"
#include "keratoflow/random.hpp"

using namespace keratoflow;
using namespace keratoflow::gmm;

namespace {

struct Blobs {
  std::vector<Point> points;
  std::vector<std::size_t> truth;
};

Blobs four_blobs(std::size_t per, double spread, std::uint64_t seed) {
  const Point centers[4] = {{-10, -10}, {10, -10}, {-10, 10}, {10, 10}};
  Rng rng(seed);
  Blobs b;
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < per; ++i) {
      b.points.push_back({centers[c][0] + spread * rng.normal(), centers[c][1] + spread * rng.normal()});
      b.truth.push_back(c);
    }
  }
  return b;
}

GmmModel single_component(Sym2 cov, Point mean = {0, 0}) {
  GmmModel m;
  m.weights = {1.0};
  m.means = {mean};
  m.covariances = {cov};
  return m;
}

}  // namespace

TEST(Gmm, RecoversSeparatedBlobs) {
  const auto blobs = four_blobs(100, 0.5, 1);
  const auto model = fit_em(blobs.points);
  EXPECT_TRUE(model.converged);
  const auto labels = assign_clusters(model, blobs.points).hard_labels;
  EXPECT_DOUBLE_EQ(metrics::align_clusters(labels, blobs.truth).accuracy, 1.0);
  for (double w : model.weights) EXPECT_NEAR(w, 0.25, 1e-6);
}

TEST(Gmm, SingleComponentIsTheSampleMoments) {
  Rng rng(2);
  std::vector<Point> pts(200);
  for (auto& p : pts) p = {1 + 2 * rng.normal(), -3 + 0.5 * rng.normal() + 0.3 * p[0]};
  EmOptions options;
  options.k = 1;
  const auto model = fit_em(pts, options);
  double mx = 0, my = 0;
  for (const auto& p : pts) mx += p[0], my += p[1];
  mx /= pts.size(), my /= pts.size();
  double xx = 0, xy = 0, yy = 0;
  for (const auto& p : pts) {
    xx += (p[0] - mx) * (p[0] - mx);
    xy += (p[0] - mx) * (p[1] - my);
    yy += (p[1] - my) * (p[1] - my);
  }
  const double n = static_cast<double>(pts.size());
  EXPECT_NEAR(model.means[0][0], mx, 1e-9);
  EXPECT_NEAR(model.means[0][1], my, 1e-9);
  EXPECT_NEAR(model.covariances[0].xx, xx / n, 1e-9);
  EXPECT_NEAR(model.covariances[0].xy, xy / n, 1e-9);
  EXPECT_NEAR(model.covariances[0].yy, yy / n, 1e-9);
}

TEST(Gmm, LogLikelihoodNeverDecreases) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto blobs = four_blobs(40, 6.0, s);
    EmOptions options;
    options.seed = s;
    const auto model = fit_em(blobs.points, options);
    const auto& t = model.log_likelihood_trace;
    ASSERT_GE(t.size(), 2u);
    for (std::size_t i = 1; i < t.size(); ++i) EXPECT_GE(t[i], t[i - 1] - 1e-9) << "seed " << s;
    EXPECT_NEAR(model.final_log_likelihood, log_likelihood(model, blobs.points), 1e-9 * std::abs(model.final_log_likelihood));
  }
}

TEST(Gmm, ResponsibilitiesSumToOne) {
  const auto blobs = four_blobs(30, 4.0, 3);
  const auto model = fit_em(blobs.points);
  const auto a = assign_clusters(model, blobs.points);
  for (std::size_t r = 0; r < a.responsibilities.rows(); ++r) {
    double sum = 0;
    for (double v : a.responsibilities.row(r)) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(predict_cluster(model, blobs.points[r]).label, a.hard_labels[r]);
  }
}

TEST(Gmm, CovariancesStayPositiveDefinite) {
  // Two exact duplicates per cluster push covariances toward singular.
  std::vector<Point> pts;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 5; ++i) pts.push_back({10.0 * c, 0.0});
    pts.push_back({10.0 * c + 0.5, 0.5});
  }
  const auto model = fit_em(pts);
  for (const auto& cov : model.covariances) EXPECT_GT(cov.eigenvalues()[1], 0.0);
}

TEST(Gmm, PermutationOfInputDoesNotChangeTheClustering) {
  auto blobs = four_blobs(50, 1.0, 4);
  const auto model = fit_em(blobs.points);
  std::vector<Point> reversed(blobs.points.rbegin(), blobs.points.rend());
  const auto model2 = fit_em(reversed);
  EXPECT_NEAR(model.final_log_likelihood, model2.final_log_likelihood, 1e-6);
  const auto a = assign_clusters(model, blobs.points).hard_labels;
  const auto b = assign_clusters(model2, blobs.points).hard_labels;
  EXPECT_DOUBLE_EQ(metrics::align_clusters(a, b).accuracy, 1.0);
}

TEST(Gmm, Errors) {
  std::vector<Point> few{{0, 0}, {1, 1}, {1, 1}, {2, 2}, {2, 2}};
  EXPECT_THROW(fit_em(few), ValidationError);  // 3 distinct points for k = 4
  std::vector<Point> nan{{0, 0}, {1, 0}, {0, 1}, {1, std::nan("")}};
  EXPECT_THROW(fit_em(nan), ValidationError);
}

TEST(Ellipse, IdentityIsACircle) {
  const auto e = confidence_ellipse(single_component({}), 0, 2.0);
  EXPECT_DOUBLE_EQ(e.semi_major, 2.0);
  EXPECT_DOUBLE_EQ(e.semi_minor, 2.0);
}

TEST(Ellipse, AxisAligned) {
  const auto e = confidence_ellipse(single_component({4, 0, 1}, {1, 2}), 0, 1.0);
  EXPECT_DOUBLE_EQ(e.semi_major, 2.0);
  EXPECT_DOUBLE_EQ(e.semi_minor, 1.0);
  EXPECT_DOUBLE_EQ(e.angle, 0.0);
  EXPECT_EQ(e.center, (Point{1, 2}));
  const auto tall = confidence_ellipse(single_component({1, 0, 4}), 0, 1.0);
  EXPECT_NEAR(tall.angle, std::numbers::pi / 2, 1e-15);
}

TEST(Ellipse, RotatesWithTheCovariance) {
  const Sym2 cov{3, 1, 2};
  // R(90) cov R(90)^T swaps the diagonal and negates the off-diagonal.
  const Sym2 rotated{cov.yy, -cov.xy, cov.xx};
  const auto a = confidence_ellipse(single_component(cov), 0);
  const auto b = confidence_ellipse(single_component(rotated), 0);
  EXPECT_NEAR(a.semi_major, b.semi_major, 1e-12);
  EXPECT_NEAR(a.semi_minor, b.semi_minor, 1e-12);
  double diff = b.angle - a.angle - std::numbers::pi / 2;
  diff = std::remainder(diff, std::numbers::pi);
  EXPECT_NEAR(diff, 0.0, 1e-12);
}

TEST(Gmm, CollapsedComponentsSitOnTheEigenvalueFloor) {
  // Three points on a line: the fitted covariance is singular along the normal.
  std::vector<Point> pts{{0, 0}, {1, 1}, {2, 2}, {10, 0}, {11, 0.5}, {10, 1}, {0, 10}, {1, 11}, {0.5, 10}, {9, 9}, {10, 10}, {9.5, 10.5}};
  EmOptions options;
  options.k = 4;
  const auto model = fit_em(pts, options);
  for (const auto& cov : model.covariances) EXPECT_GE(cov.eigenvalues()[1], options.regularization * (1 - 1e-9));
}
