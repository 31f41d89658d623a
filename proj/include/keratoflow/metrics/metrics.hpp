#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "keratoflow/matrix.hpp"

// Class and cluster labels here are 0-based indices in [0, k).
namespace keratoflow::metrics {

/// Rows are truth, columns are prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 4);

  void add(std::size_t truth, std::size_t predicted);
  std::size_t at(std::size_t truth, std::size_t predicted) const;
  std::size_t classes() const noexcept { return classes_; }
  std::size_t total() const noexcept;
  std::size_t trace() const noexcept;
  double accuracy() const noexcept;

  nlohmann::json to_json() const;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> truth,
                                 std::span<const std::size_t> predicted, std::size_t classes = 4);

struct Alignment {
  std::vector<std::size_t> permutation;  // cluster c is read as class permutation[c]
  double accuracy = 0.0;

  std::vector<std::size_t> apply(std::span<const std::size_t> clusters) const;
};

/// Exhaustive search over all k! cluster-to-class maps for the one with the
/// highest accuracy. Ties go to the lexicographically first permutation.
/// Throws ValidationError on length mismatch or labels >= k.
Alignment align_clusters(std::span<const std::size_t> clusters, std::span<const std::size_t> truth,
                         std::size_t classes = 4);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) ... (1,1)
  double auc = 0.0;
  std::string class_id;
};

/// Thresholds sweep the distinct scores from high to low; equal scores move
/// together. AUC is the trapezoid area, accumulated in integer counts so it
/// equals the Mann-Whitney statistic exactly. Throws ValidationError unless
/// there is at least one positive and one negative.
RocCurve roc_curve(std::span<const double> scores, const std::vector<bool>& positives);

struct MulticlassAuc {
  std::vector<std::optional<double>> per_class;  // nullopt when the class is absent
  std::vector<RocCurve> curves;                  // defined classes, then micro, then macro
  double micro = 0.0;
  double macro = 0.0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

/// One-vs-rest AUC per class from probability columns; macro is the plain
/// mean over defined classes, micro pools every (sample, class) indicator.
MulticlassAuc multiclass_auc(const Matrix& probabilities, std::span<const std::size_t> truth);

struct RepetitionStats {
  double mean = 0.0;
  double std_dev = 0.0;  // n-1 denominator; 0 for one value
  double max = 0.0;
  std::size_t count = 0;
  bool degenerate = false;  // single value

  nlohmann::json to_json() const;
};

/// Throws ValidationError on an empty list.
RepetitionStats repetition_stats(std::span<const double> values);

}  // namespace keratoflow::metrics
