#include "keratoflow/domain/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "keratoflow/error.hpp"

namespace keratoflow::domain {

const std::array<std::string_view, kFeatureCount>& feature_names() {
  static constexpr std::array<std::string_view, kFeatureCount> names = {
      "gender",
      "age",
      "nationality",
      "diabetes",
      "atopy",
      "allergy",
      "hypertension",
      "other_disease",
      "years_since_diagnosis",
      "known_eye_history",
      "family_history",
      "eye_rubbing",
      "primary_optical_aid",
      "udva",
      "cdva",
      "hydrops",
      "corneal_scarring",
      "vogts_striae",
      "fleischers_ring",
      "refractive_sphere",
      "refractive_cylinder",
      "refractive_axis",
      "flat_k",
      "steep_k",
      "thinnest_pachymetry",
      "thinnest_loc_x",
      "thinnest_loc_y",
      "central_pachymetry",
      "mean_central_k",
  };
  return names;
}

EncodingTable EncodingTable::defaults() {
  EncodingTable table;
  table.levels_["gender"] = {{"male", 0.0}, {"female", 1.0}};
  table.levels_["primary_optical_aid"] = {
      {"none", 0.0}, {"glasses", 1.0}, {"soft_lens", 2.0}, {"rigid_lens", 3.0}};
  table.levels_["nationality"] = {{"AU", 0.0}, {"NZ", 1.0}, {"GB", 2.0}, {"CN", 3.0},
                                  {"IN", 4.0}, {"LB", 5.0}, {"GR", 6.0}, {"VN", 7.0},
                                  {"PH", 8.0}, {"OTHER", 9.0}};
  return table;
}

EncodingTable EncodingTable::from_json(const nlohmann::json& doc) {
  try {
    EncodingTable table;
    table.schema_version_ = doc.at("schema_version").get<int>();
    if (table.schema_version_ != kFeatureSchemaVersion) {
      throw EncodingError("unsupported encoding schema_version " +
                          std::to_string(table.schema_version_));
    }
    for (const auto& [variable, levels] : doc.at("categorical").items()) {
      auto& dest = table.levels_[variable];
      for (const auto& [level, code] : levels.items()) dest[level] = code.get<double>();
    }
    for (const char* required : {"gender", "primary_optical_aid", "nationality"}) {
      if (table.levels_.find(required) == table.levels_.end()) {
        throw EncodingError(std::string("encoding table lacks categorical variable '") + required +
                            "'");
      }
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw EncodingError(std::string("malformed encoding table: ") + e.what());
  }
}

nlohmann::json EncodingTable::to_json() const {
  nlohmann::json categorical = nlohmann::json::object();
  for (const auto& [variable, levels] : levels_) {
    for (const auto& [level, code] : levels) categorical[variable][level] = code;
  }
  return {{"schema_version", schema_version_},
          {"features", feature_names()},
          {"categorical", std::move(categorical)}};
}

double EncodingTable::code(std::string_view variable, std::string_view level) const {
  const auto var = levels_.find(variable);
  if (var == levels_.end()) {
    throw EncodingError("no encoding for categorical variable '" + std::string(variable) + "'");
  }
  const auto it = var->second.find(std::string(level));
  if (it == var->second.end()) {
    throw EncodingError("unknown level '" + std::string(level) + "' for " + std::string(variable));
  }
  return it->second;
}

RawFeatures encode_features(const PatientRecord& r, const EncodingTable& table) {
  auto flag = [](bool b) { return b ? 1.0 : 0.0; };
  return RawFeatures{
      table.code("gender", to_string(r.gender)),
      r.age,
      table.code("nationality", r.nationality),
      flag(r.diabetes),
      flag(r.atopy),
      flag(r.allergy),
      flag(r.hypertension),
      flag(r.other_disease),
      r.years_since_diagnosis,
      flag(r.known_eye_history),
      flag(r.family_history),
      static_cast<double>(r.eye_rubbing),
      table.code("primary_optical_aid", to_string(r.primary_optical_aid)),
      r.udva,
      r.cdva,
      flag(r.hydrops),
      flag(r.corneal_scarring),
      flag(r.vogts_striae),
      flag(r.fleischers_ring),
      r.refractive_sphere,
      r.refractive_cylinder,
      r.refractive_axis,
      r.flat_k,
      r.steep_k,
      r.thinnest_pachymetry,
      r.thinnest_loc_x,
      r.thinnest_loc_y,
      r.central_pachymetry,
      r.mean_central_k(),
  };
}

Matrix encode_cohort(std::span<const PatientRecord> records, const EncodingTable& table) {
  Matrix out(records.size(), kFeatureCount);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RawFeatures f = encode_features(records[i], table);
    std::copy(f.begin(), f.end(), out.row(i).begin());
  }
  return out;
}

namespace {

bool is_constant(double mean, double stddev) {
  return stddev <= 1e-12 * std::max(1.0, std::abs(mean));
}

}  // namespace

FeatureStats fit_standardization(const Matrix& raw) {
  if (raw.rows() == 0) throw ValidationError("cannot standardize an empty cohort");
  const double n = static_cast<double>(raw.rows());
  FeatureStats stats;
  stats.mean.assign(raw.cols(), 0.0);
  stats.stddev.assign(raw.cols(), 0.0);
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    for (std::size_t c = 0; c < raw.cols(); ++c) stats.mean[c] += raw(r, c);
  }
  for (double& m : stats.mean) m /= n;
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    for (std::size_t c = 0; c < raw.cols(); ++c) {
      const double d = raw(r, c) - stats.mean[c];
      stats.stddev[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < raw.cols(); ++c) {
    const double s = std::sqrt(stats.stddev[c] / n);
    stats.stddev[c] = is_constant(stats.mean[c], s) ? 0.0 : s;
  }
  return stats;
}

Matrix FeatureStats::apply(const Matrix& raw) const {
  if (raw.cols() != dim()) {
    throw ShapeError("standardization expects " + std::to_string(dim()) + " columns, got " +
                     raw.shape_string());
  }
  Matrix out(raw.rows(), raw.cols());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    for (std::size_t c = 0; c < raw.cols(); ++c) {
      out(r, c) = stddev[c] == 0.0 ? 0.0 : (raw(r, c) - mean[c]) / stddev[c];
    }
  }
  return out;
}

FeatureVector FeatureStats::apply(const RawFeatures& raw) const {
  if (dim() != kFeatureCount) {
    throw ShapeError("standardization has " + std::to_string(dim()) + " columns, expected 29");
  }
  FeatureVector out;
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    out.values[c] = stddev[c] == 0.0 ? 0.0 : (raw[c] - mean[c]) / stddev[c];
  }
  return out;
}

nlohmann::json FeatureStats::to_json() const { return {{"mean", mean}, {"stddev", stddev}}; }

FeatureStats FeatureStats::from_json(const nlohmann::json& doc) {
  try {
    FeatureStats s;
    s.mean = doc.at("mean").get<std::vector<double>>();
    s.stddev = doc.at("stddev").get<std::vector<double>>();
    if (s.mean.size() != s.stddev.size()) throw ValidationError("feature stats length mismatch");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed feature stats: ") + e.what());
  }
}

StandardizedCohort standardize(const Matrix& cohort) {
  StandardizedCohort out;
  out.stats = fit_standardization(cohort);
  out.features = out.stats.apply(cohort);
  return out;
}

}  // namespace keratoflow::domain
