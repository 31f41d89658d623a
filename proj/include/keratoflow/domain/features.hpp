#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "keratoflow/domain/record.hpp"
#include "keratoflow/matrix.hpp"

namespace keratoflow::domain {

inline constexpr std::size_t kFeatureCount = 29;
inline constexpr int kFeatureSchemaVersion = 1;

/// Column names of the 29-feature encoding, in slot order. The first 28 are
/// the non-label clinical variables; the last is mean central K.
const std::array<std::string_view, kFeatureCount>& feature_names();

using RawFeatures = std::array<double, kFeatureCount>;

struct FeatureVector {
  RawFeatures values{};
  int schema_version = kFeatureSchemaVersion;
};

/// Numeric codes for categorical levels (gender, nationality, primary
/// optical aid). Loaded from a versioned JSON document:
///   {"schema_version": 1, "categorical": {"gender": {"male": 0, ...}, ...}}
class EncodingTable {
 public:
  static EncodingTable defaults();
  static EncodingTable from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  int schema_version() const noexcept { return schema_version_; }

  /// Throws EncodingError naming the variable and level when unknown.
  double code(std::string_view variable, std::string_view level) const;

 private:
  int schema_version_ = kFeatureSchemaVersion;
  std::map<std::string, std::map<std::string, double>, std::less<>> levels_;
};

/// Deterministic numeric encoding. Booleans map to 0/1, categoricals through
/// the table, eye_rubbing as its ordinal. ak_grade is never read.
RawFeatures encode_features(const PatientRecord& record, const EncodingTable& table);

/// One row per record, in cohort order.
Matrix encode_cohort(std::span<const PatientRecord> records, const EncodingTable& table);

/// Per-column z-score parameters (population standard deviation).
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // 0 marks a constant column

  std::size_t dim() const noexcept { return mean.size(); }

  /// (x - mean) / std per column; constant columns become 0.
  Matrix apply(const Matrix& raw) const;
  FeatureVector apply(const RawFeatures& raw) const;

  nlohmann::json to_json() const;
  static FeatureStats from_json(const nlohmann::json& doc);

  bool operator==(const FeatureStats&) const = default;
};

/// Statistics of the given rows only. Throws ValidationError on an empty cohort.
FeatureStats fit_standardization(const Matrix& raw);

struct StandardizedCohort {
  Matrix features;
  FeatureStats stats;
};

/// Fits statistics on `cohort` and applies them to it.
StandardizedCohort standardize(const Matrix& cohort);

}  // namespace keratoflow::domain
