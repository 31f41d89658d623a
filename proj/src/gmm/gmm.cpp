#include "keratoflow/gmm/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include "keratoflow/error.hpp"
#include "keratoflow/random.hpp"

namespace keratoflow::gmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr std::size_t kLloydIterations = 100;

double sq_dist(const Point& a, const Point& b) noexcept {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

double log_gaussian(const Point& x, const Point& mean, const Sym2& cov) noexcept {
  const double det = cov.det();
  const double dx = x[0] - mean[0];
  const double dy = x[1] - mean[1];
  const double maha = (cov.yy * dx * dx - 2.0 * cov.xy * dx * dy + cov.xx * dy * dy) / det;
  return -kLog2Pi - 0.5 * std::log(det) - 0.5 * maha;
}

/// Per-component log(w_k N(x | k)) into `out`; returns the log-sum-exp.
double log_joint(const GmmModel& m, const Point& x, std::vector<double>& out) {
  out.resize(m.k());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < m.k(); ++c) {
    out[c] = m.weights[c] > 0.0 ? std::log(m.weights[c]) + log_gaussian(x, m.means[c], m.covariances[c])
                                : -std::numeric_limits<double>::infinity();
    top = std::max(top, out[c]);
  }
  double sum = 0.0;
  for (double v : out) sum += std::exp(v - top);
  return top + std::log(sum);
}

void validate_points(std::span<const Point> points, std::size_t k) {
  if (k == 0) throw ValidationError("GMM needs at least one component");
  std::set<Point> distinct;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i][0]) || !std::isfinite(points[i][1])) {
      throw ValidationError("GMM point " + std::to_string(i) + " is not finite");
    }
    if (distinct.size() < k) distinct.insert(points[i]);
  }
  if (distinct.size() < k) {
    throw ValidationError("GMM with k=" + std::to_string(k) + " needs at least " +
                          std::to_string(k) + " distinct points, got " +
                          std::to_string(distinct.size()));
  }
}

std::vector<Point> kmeans_plus_plus(std::span<const Point> points, std::size_t k, Rng& rng) {
  std::vector<Point> centers;
  centers.push_back(points[rng.below(points.size())]);
  std::vector<double> d2(points.size(), std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = std::min(d2[i], sq_dist(points[i], centers.back()));
      total += d2[i];
    }
    double target = rng.uniform() * total;
    std::size_t pick = 0;
    for (; pick + 1 < points.size(); ++pick) {
      if (d2[pick] > 0.0 && target < d2[pick]) break;
      target -= d2[pick];
    }
    // Rounding can walk off the end onto a point already chosen.
    while (d2[pick] == 0.0) pick = (pick + points.size() - 1) % points.size();
    centers.push_back(points[pick]);
  }
  return centers;
}

std::vector<std::size_t> nearest(std::span<const Point> points, const std::vector<Point>& centers) {
  std::vector<std::size_t> labels(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = sq_dist(points[i], centers[c]);
      if (d < best) {
        best = d;
        labels[i] = c;
      }
    }
  }
  return labels;
}

/// Lloyd refinement; a center that loses all its points keeps its position.
std::vector<std::size_t> lloyd(std::span<const Point> points, std::vector<Point> centers) {
  auto labels = nearest(points, centers);
  for (std::size_t it = 0; it < kLloydIterations; ++it) {
    std::vector<Point> sums(centers.size(), Point{0.0, 0.0});
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      sums[labels[i]][0] += points[i][0];
      sums[labels[i]][1] += points[i][1];
      ++counts[labels[i]];
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (counts[c] > 0) {
        centers[c] = {sums[c][0] / static_cast<double>(counts[c]),
                      sums[c][1] / static_cast<double>(counts[c])};
      }
    }
    auto next = nearest(points, centers);
    if (next == labels) break;
    labels = std::move(next);
  }
  return labels;
}

/// Weighted M-step from a responsibility matrix (points x k).
// Closest covariance (in the EM objective) whose eigenvalues are all >= floor:
// the eigenvalues are clipped, the eigenvectors kept. Adding floor * I instead
// would also bound the spectrum, but it moves every covariance off the
// M-step optimum, and near a collapsing component that is enough to make the
// log-likelihood dip between iterations. Clipping keeps EM monotone.
Sym2 floor_eigenvalues(const Sym2& s, double floor) {
  const auto [l1, l2] = s.eigenvalues();
  if (l2 >= floor) return s;
  const double theta = 0.5 * std::atan2(2.0 * s.xy, s.xx - s.yy);
  const double c = std::cos(theta), sn = std::sin(theta);
  const double a = std::max(l1, floor), b = floor;
  return {a * c * c + b * sn * sn, (a - b) * c * sn, a * sn * sn + b * c * c};
}

void m_step(GmmModel& m, std::span<const Point> points, const Matrix& resp, double eps) {
  const std::size_t k = m.k();
  const double n = static_cast<double>(points.size());
  for (std::size_t c = 0; c < k; ++c) {
    double nk = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double r = resp(i, c);
      nk += r;
      sx += r * points[i][0];
      sy += r * points[i][1];
    }
    m.weights[c] = nk / n;
    if (nk <= 0.0) continue;  // dead component: weight 0, parameters frozen
    const Point mu{sx / nk, sy / nk};
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double r = resp(i, c);
      const double dx = points[i][0] - mu[0];
      const double dy = points[i][1] - mu[1];
      cxx += r * dx * dx;
      cxy += r * dx * dy;
      cyy += r * dy * dy;
    }
    m.means[c] = mu;
    m.covariances[c] = floor_eigenvalues({cxx / nk, cxy / nk, cyy / nk}, eps);
  }
}

/// Responsibilities into `resp`; returns the total log-likelihood.
double e_step(const GmmModel& m, std::span<const Point> points, Matrix& resp) {
  std::vector<double> lj;
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double lse = log_joint(m, points[i], lj);
    total += lse;
    for (std::size_t c = 0; c < m.k(); ++c) resp(i, c) = std::exp(lj[c] - lse);
  }
  return total;
}

GmmModel run_em(std::span<const Point> points, const EmOptions& options, std::uint64_t seed) {
  const std::size_t k = options.k;
  Rng rng(seed);
  const auto labels = lloyd(points, kmeans_plus_plus(points, k, rng));

  GmmModel m;
  m.weights.assign(k, 0.0);
  m.means.assign(k, Point{0.0, 0.0});
  m.covariances.assign(k, Sym2{});
  Matrix resp(points.size(), k);
  for (std::size_t i = 0; i < points.size(); ++i) resp(i, labels[i]) = 1.0;
  m_step(m, points, resp, options.regularization);

  double previous = -std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    const double ll = e_step(m, points, resp);
    if (!std::isfinite(ll)) throw RuntimeFailure("GMM log-likelihood became non-finite");
    m.log_likelihood_trace.push_back(ll);
    m.final_log_likelihood = ll;
    if (ll - previous < options.tol) {
      m.converged = true;
      break;
    }
    previous = ll;
    m_step(m, points, resp, options.regularization);
    ++m.iterations;
  }
  if (!m.converged) m.final_log_likelihood = log_likelihood(m, points);
  return m;
}

}  // namespace

std::array<double, 2> Sym2::eigenvalues() const noexcept {
  const double mid = 0.5 * (xx + yy);
  const double half_diff = 0.5 * (xx - yy);
  const double r = std::hypot(half_diff, xy);
  return {mid + r, mid - r};
}

nlohmann::json GmmModel::to_json() const {
  nlohmann::json comps = nlohmann::json::array();
  for (std::size_t c = 0; c < k(); ++c) {
    comps.push_back({{"weight", weights[c]},
                     {"mean", {means[c][0], means[c][1]}},
                     {"covariance", {{covariances[c].xx, covariances[c].xy},
                                     {covariances[c].xy, covariances[c].yy}}}});
  }
  return {{"components", comps},
          {"converged", converged},
          {"iterations", iterations},
          {"final_log_likelihood", final_log_likelihood}};
}

GmmModel fit_em(std::span<const Point> points, const EmOptions& options) {
  validate_points(points, options.k);
  if (options.restarts == 0) throw ValidationError("GMM needs at least one restart");
  GmmModel best;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    GmmModel m = run_em(points, options, derive_seed(options.seed, r));
    if (r == 0 || m.final_log_likelihood > best.final_log_likelihood) best = std::move(m);
  }
  return best;
}

double log_likelihood(const GmmModel& model, std::span<const Point> points) {
  std::vector<double> lj;
  double total = 0.0;
  for (const auto& p : points) total += log_joint(model, p, lj);
  return total;
}

ClusterPrediction predict_cluster(const GmmModel& model, const Point& point) {
  std::vector<double> lj;
  const double lse = log_joint(model, point, lj);
  ClusterPrediction out;
  out.responsibilities.resize(model.k());
  for (std::size_t c = 0; c < model.k(); ++c) {
    out.responsibilities[c] = std::exp(lj[c] - lse);
    if (out.responsibilities[c] > out.responsibilities[out.label]) out.label = c;
  }
  return out;
}

ClusterAssignment assign_clusters(const GmmModel& model, std::span<const Point> points) {
  ClusterAssignment out;
  out.responsibilities = Matrix(points.size(), model.k());
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto p = predict_cluster(model, points[i]);
    out.hard_labels.push_back(p.label);
    std::copy(p.responsibilities.begin(), p.responsibilities.end(),
              out.responsibilities.row(i).begin());
  }
  return out;
}

Ellipse confidence_ellipse(const GmmModel& model, std::size_t component, double n_std) {
  if (component >= model.k()) throw ValidationError("no GMM component " + std::to_string(component));
  const Sym2& s = model.covariances[component];
  const auto eig = s.eigenvalues();
  Ellipse e;
  e.center = model.means[component];
  e.semi_major = n_std * std::sqrt(std::max(eig[0], 0.0));
  e.semi_minor = n_std * std::sqrt(std::max(eig[1], 0.0));
  // Major-axis direction of [[a, b], [b, c]]: angle = atan2(2b, a - c) / 2.
  double angle = 0.5 * std::atan2(2.0 * s.xy, s.xx - s.yy);
  if (angle <= -std::numbers::pi / 2) angle += std::numbers::pi;
  e.angle = angle;
  return e;
}

}  // namespace keratoflow::gmm
