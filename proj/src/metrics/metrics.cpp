#include "keratoflow/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <spdlog/spdlog.h>

#include "keratoflow/error.hpp"

namespace keratoflow::metrics {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= classes_ || predicted >= classes_) {
    throw ValidationError("confusion matrix label out of range");
  }
  ++counts_[truth * classes_ + predicted];
}

std::size_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
  return counts_.at(truth * classes_ + predicted);
}

std::size_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const noexcept {
  std::size_t t = 0;
  for (std::size_t i = 0; i < classes_; ++i) t += counts_[i * classes_ + i];
  return t;
}

double ConfusionMatrix::accuracy() const noexcept {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

nlohmann::json ConfusionMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < classes_; ++t) {
    std::vector<std::size_t> row(counts_.begin() + static_cast<std::ptrdiff_t>(t * classes_),
                                 counts_.begin() + static_cast<std::ptrdiff_t>((t + 1) * classes_));
    rows.push_back(row);
  }
  return rows;
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> truth,
                                 std::span<const std::size_t> predicted, std::size_t classes) {
  if (truth.size() != predicted.size()) {
    throw ValidationError("confusion_matrix: truth and prediction lengths differ");
  }
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) m.add(truth[i], predicted[i]);
  return m;
}

std::vector<std::size_t> Alignment::apply(std::span<const std::size_t> clusters) const {
  std::vector<std::size_t> out;
  out.reserve(clusters.size());
  for (auto c : clusters) out.push_back(permutation.at(c));
  return out;
}

Alignment align_clusters(std::span<const std::size_t> clusters, std::span<const std::size_t> truth,
                         std::size_t classes) {
  if (clusters.size() != truth.size()) {
    throw ValidationError("align_clusters: " + std::to_string(clusters.size()) +
                          " cluster labels vs " + std::to_string(truth.size()) + " true labels");
  }
  if (classes == 0 || classes > 10) throw ValidationError("align_clusters: unsupported k");
  // Co-occurrence counts; each permutation's hit count is a sum over them.
  std::vector<std::size_t> counts(classes * classes, 0);
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i] >= classes || truth[i] >= classes) {
      throw ValidationError("align_clusters: label out of range");
    }
    ++counts[clusters[i] * classes + truth[i]];
  }
  std::vector<std::size_t> perm(classes);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Alignment best{perm, -1.0};
  std::size_t best_hits = 0;
  bool first = true;
  do {
    std::size_t hits = 0;
    for (std::size_t c = 0; c < classes; ++c) hits += counts[c * classes + perm[c]];
    if (first || hits > best_hits) {
      best_hits = hits;
      best.permutation = perm;
      first = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  best.accuracy = clusters.empty() ? 0.0
                                   : static_cast<double>(best_hits) /
                                         static_cast<double>(clusters.size());
  return best;
}

RocCurve roc_curve(std::span<const double> scores, const std::vector<bool>& positives) {
  if (scores.size() != positives.size()) {
    throw ValidationError("roc_curve: scores and labels differ in length");
  }
  std::uint64_t n_pos = 0;
  for (bool p : positives) n_pos += p ? 1 : 0;
  const std::uint64_t n_neg = positives.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw ValidationError("roc_curve: need at least one positive and one negative (AUC undefined)");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw ValidationError("roc_curve: NaN score");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  // Twice the area in units of 1/(P*N): each group adds dFP * (2 TP_before + dTP).
  std::uint64_t doubled_area = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t group_tp = 0;
    std::uint64_t group_fp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (positives[order[j]]) {
        ++group_tp;
      } else {
        ++group_fp;
      }
      ++j;
    }
    doubled_area += group_fp * (2 * tp + group_tp);
    tp += group_tp;
    fp += group_fp;
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                            static_cast<double>(tp) / static_cast<double>(n_pos)});
    i = j;
  }
  curve.auc = static_cast<double>(doubled_area) /
              (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return curve;
}

namespace {

double interpolate_tpr(const RocCurve& curve, double fpr) {
  const auto& pts = curve.points;
  // Last point at or left of fpr; vertical runs resolve to their top.
  std::size_t hi = 0;
  while (hi < pts.size() && pts[hi].fpr <= fpr) ++hi;
  if (hi == 0) return pts.front().tpr;
  if (hi == pts.size()) return pts.back().tpr;
  const RocPoint& a = pts[hi - 1];
  const RocPoint& b = pts[hi];
  if (b.fpr == a.fpr) return a.tpr;
  return a.tpr + (b.tpr - a.tpr) * (fpr - a.fpr) / (b.fpr - a.fpr);
}

}  // namespace

MulticlassAuc multiclass_auc(const Matrix& probabilities, std::span<const std::size_t> truth) {
  if (probabilities.rows() != truth.size()) {
    throw ValidationError("multiclass_auc: probability rows and labels differ in length");
  }
  const std::size_t k = probabilities.cols();
  MulticlassAuc result;
  result.per_class.assign(k, std::nullopt);
  std::vector<RocCurve> defined;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> scores(truth.size());
    std::vector<bool> positive(truth.size());
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] >= k) throw ValidationError("multiclass_auc: label out of range");
      scores[i] = probabilities(i, c);
      positive[i] = truth[i] == c;
      n_pos += positive[i] ? 1 : 0;
    }
    if (n_pos == 0 || n_pos == truth.size()) {
      const std::string msg = "class " + std::to_string(c + 1) +
                              (n_pos == 0 ? " absent from truth" : " is the only class present") +
                              "; its AUC is undefined and excluded from the macro average";
      result.warnings.push_back(msg);
      spdlog::warn("{}", msg);
      continue;
    }
    RocCurve curve = roc_curve(scores, positive);
    curve.class_id = std::to_string(c + 1);
    result.per_class[c] = curve.auc;
    defined.push_back(curve);
  }
  if (defined.empty()) throw ValidationError("multiclass_auc: no class has a defined AUC");

  std::vector<double> pooled_scores;
  std::vector<bool> pooled_positive;
  pooled_scores.reserve(truth.size() * k);
  pooled_positive.reserve(truth.size() * k);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      pooled_scores.push_back(probabilities(i, c));
      pooled_positive.push_back(truth[i] == c);
    }
  }
  RocCurve micro = roc_curve(pooled_scores, pooled_positive);
  micro.class_id = "micro";
  result.micro = micro.auc;

  double total = 0.0;
  for (const auto& c : defined) total += c.auc;
  result.macro = total / static_cast<double>(defined.size());

  // Macro curve: per-class TPR averaged on the union of FPR grid points.
  std::vector<double> grid;
  for (const auto& c : defined) {
    for (const auto& p : c.points) grid.push_back(p.fpr);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  RocCurve macro;
  macro.class_id = "macro";
  macro.auc = result.macro;
  macro.points.push_back({0.0, 0.0});
  for (double f : grid) {
    double tpr = 0.0;
    for (const auto& c : defined) tpr += interpolate_tpr(c, f);
    tpr /= static_cast<double>(defined.size());
    if (f == 0.0 && tpr == 0.0) continue;
    macro.points.push_back({f, tpr});
  }
  macro.points.back() = {1.0, 1.0};

  result.curves = std::move(defined);
  result.curves.push_back(std::move(micro));
  result.curves.push_back(std::move(macro));
  return result;
}

nlohmann::json MulticlassAuc::to_json() const {
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    per[std::to_string(c + 1)] = per_class[c] ? nlohmann::json(*per_class[c]) : nlohmann::json();
  }
  return {{"per_class", per}, {"micro", micro}, {"macro", macro}, {"warnings", warnings}};
}

RepetitionStats repetition_stats(std::span<const double> values) {
  if (values.empty()) throw ValidationError("repetition_stats: empty list");
  RepetitionStats s;
  s.count = values.size();
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  s.max = *std::max_element(values.begin(), values.end());
  if (values.size() == 1) {
    s.degenerate = true;
    spdlog::warn("repetition_stats: single value, standard deviation reported as 0");
    return s;
  }
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  return s;
}

nlohmann::json RepetitionStats::to_json() const {
  return {{"mean", mean}, {"std_dev", std_dev}, {"max", max}, {"count", count},
          {"degenerate", degenerate}};
}

}  // namespace keratoflow::metrics
