#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "keratoflow/domain/record.hpp"

namespace keratoflow::synth {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Sampling regions and covariate odds for eyes of one A-K grade.
///
/// The topographic regions (mean_k, refraction, thinnest, scarring) decide
/// the grade and should sit inside that grade's rule region when
/// noise_level is 0. Everything else only shapes the other features: it is
/// what makes grades recoverable (or not) from the full 29-feature vector.
struct GradeProfile {
  Range mean_k;           // D
  Range refraction;       // |sphere| + |cylinder|, D
  Range cylinder_share;   // fraction of refraction carried by the cylinder
  Range k_astigmatism;    // steep_k - flat_k, D
  Range thinnest;         // um
  Range central_offset;   // central - thinnest pachymetry, um
  double scarring = 0.0;  // P(central scarring)
  double hydrops = 0.0;
  double vogts_striae = 0.0;
  double fleischers_ring = 0.0;
  Range cdva;         // logMAR
  Range udva_offset;  // udva - cdva, logMAR
  std::array<double, 3> eye_rubbing{};  // P(never, sometimes, frequent)
  std::array<double, 4> optical_aid{};  // P(none, glasses, soft, rigid)
  Range years_since_diagnosis;
  double decentration = 0.5;   // sd of thinnest-point location, mm
  double inferior_shift = 0.0;  // mean thinnest_loc_y, mm (negative = inferior)
  double atopy = 0.0;
  double allergy = 0.0;
  double known_eye_history = 0.0;
};

/// Patient-level covariates shared by both eyes.
struct Demographics {
  double age_mean = 30.0;
  double age_sd = 9.0;
  Range age_clip{12.0, 75.0};
  double diabetes = 0.05;
  double hypertension = 0.08;
  double other_disease = 0.15;
  double family_history = 0.12;
  std::vector<std::pair<std::string, double>> nationality;  // level, weight
};

/// Jitter standard deviations applied to the grading fields, multiplied by
/// CohortConfig::noise_level.
struct JitterScales {
  double mean_k = 0.75;      // D
  double refraction = 0.75;  // D
  double thinnest = 15.0;    // um
};

struct CohortConfig {
  std::size_t n_patients = 124;
  double both_eyes_fraction = 0.91;
  double male_fraction = 0.637;
  std::array<double, 4> grade_mixture{0.30, 0.30, 0.22, 0.18};
  double noise_level = 0.0;
  std::uint64_t seed = 7;
  std::string preset = "separable";

  std::array<GradeProfile, 4> grades{};
  Demographics demographics;
  JitterScales jitter;

  /// Wide margins between grades and grade-correlated covariates; no jitter.
  static CohortConfig separable(std::uint64_t seed = 7);
  /// Regions that touch the rule boundaries, jitter on, grades 1 and 2
  /// sharing most covariate distributions.
  static CohortConfig realistic(std::uint64_t seed = 7);
  /// "separable" or "realistic"; anything else throws ValidationError.
  static CohortConfig preset_named(const std::string& name, std::uint64_t seed = 7);

  /// Throws ValidationError when a probability leaves [0, 1], the mixture
  /// does not sum to 1 (1e-9), n_patients is 0 or a range is inverted.
  void validate() const;

  /// Top-level fields only; profiles come from the preset.
  nlohmann::json to_json() const;
  /// {"preset": ..., overrides...}
  static CohortConfig from_json(const nlohmann::json& doc);
};

/// Draws a labeled cohort. For each patient: patient-level covariates, then
/// one or two eyes. For each eye a target grade is drawn from grade_mixture,
/// the grading fields are drawn inside that grade's profile (plus jitter),
/// flat/steep K are back-solved from mean K and K astigmatism, and ak_grade
/// is set by grade_ak on the finished record. Patient i uses its own
/// generator derived from (seed, i).
std::vector<domain::PatientRecord> generate_cohort(const CohortConfig& config);

/// Same as generate_cohort but also returns the sampled target grades.
struct GeneratedCohort {
  std::vector<domain::PatientRecord> records;
  std::vector<domain::AkGrade> targets;
};
GeneratedCohort generate_cohort_with_targets(const CohortConfig& config);

}  // namespace keratoflow::synth
