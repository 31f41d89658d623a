#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace keratoflow::domain {

enum class Gender { male, female };
enum class OpticalAid { none, glasses, soft_lens, rigid_lens };
enum class Eye { od, os };

std::string_view to_string(Gender value);
std::string_view to_string(OpticalAid value);
std::string_view to_string(Eye value);
Gender gender_from_string(std::string_view text);
OpticalAid optical_aid_from_string(std::string_view text);
Eye eye_from_string(std::string_view text);

/// Amsler-Krumeich grade, 1 (mild) to 4 (severe).
class AkGrade {
 public:
  /// Throws ValidationError outside 1..4.
  explicit AkGrade(int value);

  static AkGrade from_class_index(std::size_t index) { return AkGrade(static_cast<int>(index) + 1); }

  int value() const noexcept { return value_; }
  /// 0-based index used by classifiers and metrics.
  std::size_t class_index() const noexcept { return static_cast<std::size_t>(value_ - 1); }

  auto operator<=>(const AkGrade&) const = default;

 private:
  int value_;
};

inline constexpr std::size_t kGradeCount = 4;

/// One eye's clinical and topographic observation.
struct PatientRecord {
  std::string patient_id;
  Eye eye = Eye::od;

  Gender gender = Gender::male;
  double age = 0.0;  // years
  std::string nationality;
  bool diabetes = false;
  bool atopy = false;
  bool allergy = false;
  bool hypertension = false;
  bool other_disease = false;
  double years_since_diagnosis = 0.0;
  bool known_eye_history = false;
  bool family_history = false;
  int eye_rubbing = 0;  // 0 never, 1 sometimes, 2 frequent
  OpticalAid primary_optical_aid = OpticalAid::none;

  double udva = 0.0;  // logMAR
  double cdva = 0.0;  // logMAR
  bool hydrops = false;
  bool corneal_scarring = false;
  bool vogts_striae = false;
  bool fleischers_ring = false;

  double refractive_sphere = 0.0;    // D
  double refractive_cylinder = 0.0;  // D, non-positive by convention
  double refractive_axis = 0.0;      // degrees, [0, 180)
  double flat_k = 0.0;               // D
  double steep_k = 0.0;              // D
  double thinnest_pachymetry = 0.0;  // um
  double central_pachymetry = 0.0;   // um
  double thinnest_loc_x = 0.0;       // mm
  double thinnest_loc_y = 0.0;       // mm

  std::optional<AkGrade> ak_grade;

  double mean_central_k() const noexcept { return 0.5 * (flat_k + steep_k); }
  /// |sphere| + |cylinder|
  double myopia_astigmatism() const noexcept;
};

/// Checks every record invariant; throws ValidationError naming the field.
void validate(const PatientRecord& record);

}  // namespace keratoflow::domain
