#include "keratoflow/domain/record.hpp"

#include <cmath>
#include <string>

#include "keratoflow/error.hpp"

namespace keratoflow::domain {

std::string_view to_string(Gender value) { return value == Gender::male ? "male" : "female"; }

std::string_view to_string(OpticalAid value) {
  switch (value) {
    case OpticalAid::none: return "none";
    case OpticalAid::glasses: return "glasses";
    case OpticalAid::soft_lens: return "soft_lens";
    case OpticalAid::rigid_lens: return "rigid_lens";
  }
  return "none";
}

std::string_view to_string(Eye value) { return value == Eye::od ? "OD" : "OS"; }

Gender gender_from_string(std::string_view text) {
  if (text == "male") return Gender::male;
  if (text == "female") return Gender::female;
  throw ValidationError("gender: unknown level '" + std::string(text) + "'");
}

OpticalAid optical_aid_from_string(std::string_view text) {
  if (text == "none") return OpticalAid::none;
  if (text == "glasses") return OpticalAid::glasses;
  if (text == "soft_lens") return OpticalAid::soft_lens;
  if (text == "rigid_lens") return OpticalAid::rigid_lens;
  throw ValidationError("primary_optical_aid: unknown level '" + std::string(text) + "'");
}

Eye eye_from_string(std::string_view text) {
  if (text == "OD") return Eye::od;
  if (text == "OS") return Eye::os;
  throw ValidationError("eye: unknown level '" + std::string(text) + "'");
}

AkGrade::AkGrade(int value) : value_(value) {
  if (value < 1 || value > 4) {
    throw ValidationError("ak_grade must be 1-4, got " + std::to_string(value));
  }
}

double PatientRecord::myopia_astigmatism() const noexcept {
  return std::abs(refractive_sphere) + std::abs(refractive_cylinder);
}

namespace {

void require_finite(double value, const char* field) {
  if (!std::isfinite(value)) throw ValidationError(std::string(field) + " is not finite");
}

}  // namespace

void validate(const PatientRecord& r) {
  require_finite(r.age, "age");
  require_finite(r.years_since_diagnosis, "years_since_diagnosis");
  require_finite(r.udva, "udva");
  require_finite(r.cdva, "cdva");
  require_finite(r.refractive_sphere, "refractive_sphere");
  require_finite(r.refractive_cylinder, "refractive_cylinder");
  require_finite(r.refractive_axis, "refractive_axis");
  require_finite(r.flat_k, "flat_k");
  require_finite(r.steep_k, "steep_k");
  require_finite(r.thinnest_pachymetry, "thinnest_pachymetry");
  require_finite(r.central_pachymetry, "central_pachymetry");
  require_finite(r.thinnest_loc_x, "thinnest_loc_x");
  require_finite(r.thinnest_loc_y, "thinnest_loc_y");

  if (!(r.age > 0.0)) throw ValidationError("age must be positive");
  if (r.years_since_diagnosis < 0.0) {
    throw ValidationError("years_since_diagnosis must be non-negative");
  }
  if (r.eye_rubbing < 0 || r.eye_rubbing > 2) throw ValidationError("eye_rubbing must be 0-2");
  if (r.refractive_axis < 0.0 || r.refractive_axis >= 180.0) {
    throw ValidationError("refractive_axis must lie in [0, 180)");
  }
  if (!(r.flat_k > 0.0) || !(r.steep_k > 0.0)) throw ValidationError("flat_k/steep_k must be positive");
  if (r.steep_k < r.flat_k) throw ValidationError("steep_k must be >= flat_k");
  if (!(r.thinnest_pachymetry > 0.0) || !(r.central_pachymetry > 0.0)) {
    throw ValidationError("pachymetry must be positive");
  }
  if (r.thinnest_pachymetry > r.central_pachymetry) {
    throw ValidationError("thinnest_pachymetry must be <= central_pachymetry");
  }
  if (r.nationality.empty()) throw ValidationError("nationality is empty");
}

}  // namespace keratoflow::domain
