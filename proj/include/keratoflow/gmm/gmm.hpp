#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "keratoflow/matrix.hpp"

namespace keratoflow::gmm {

using Point = std::array<double, 2>;

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;

  double det() const noexcept { return xx * yy - xy * xy; }
  /// Eigenvalues, larger first.
  std::array<double, 2> eigenvalues() const noexcept;
};

struct GmmModel {
  std::vector<double> weights;
  std::vector<Point> means;
  std::vector<Sym2> covariances;
  bool converged = false;
  double final_log_likelihood = 0.0;
  std::size_t iterations = 0;
  /// Log-likelihood at the start of every E-step of the kept restart.
  std::vector<double> log_likelihood_trace;

  std::size_t k() const noexcept { return weights.size(); }
  nlohmann::json to_json() const;
};

struct EmOptions {
  std::size_t k = 4;
  std::uint64_t seed = 0;
  std::size_t max_iters = 500;
  /// Stop once the total log-likelihood improves by less than this.
  double tol = 1e-8;
  std::size_t restarts = 5;
  /// Floor on every covariance eigenvalue after each M-step.
  double regularization = 1e-6;
};

/// k-means++ seeding refined by Lloyd iterations, then EM; the restart with
/// the highest final log-likelihood is kept. Throws ValidationError on
/// non-finite points or fewer than k distinct points.
GmmModel fit_em(std::span<const Point> points, const EmOptions& options = {});

double log_likelihood(const GmmModel& model, std::span<const Point> points);

struct ClusterPrediction {
  std::size_t label = 0;
  std::vector<double> responsibilities;
};

/// Hard label is the argmax responsibility, lowest index on ties.
ClusterPrediction predict_cluster(const GmmModel& model, const Point& point);

struct ClusterAssignment {
  std::vector<std::size_t> hard_labels;
  Matrix responsibilities;  // points x k
};

ClusterAssignment assign_clusters(const GmmModel& model, std::span<const Point> points);

struct Ellipse {
  Point center{};
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle = 0.0;  // radians of the major axis, in (-pi/2, pi/2]
};

Ellipse confidence_ellipse(const GmmModel& model, std::size_t component, double n_std = 2.0);

}  // namespace keratoflow::gmm
