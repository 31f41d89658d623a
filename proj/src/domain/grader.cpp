#include "keratoflow/domain/grader.hpp"

#include <cmath>
#include <string>

#include "keratoflow/error.hpp"

namespace keratoflow::domain {

namespace {

constexpr double kGrade4MeanK = 55.0;        // strictly above
constexpr double kGrade4ScarThinnest = 300.0;  // with scarring, at or below

constexpr double kGrade3MeanK = 53.0;  // at or above
constexpr double kGrade3RefractionLo = 8.0;
constexpr double kGrade3RefractionHi = 10.0;
constexpr double kGrade3ThinnestLo = 300.0;
constexpr double kGrade3ThinnestHi = 400.0;

constexpr double kGrade2MeanK = 53.0;  // below
constexpr double kGrade2RefractionLo = 5.0;
constexpr double kGrade2RefractionHi = 8.0;
constexpr double kGrade2Thinnest = 400.0;  // at or above

void require_finite(double value, const char* field) {
  if (!std::isfinite(value)) {
    throw ValidationError(std::string("grade_ak: ") + field + " is not finite");
  }
}

bool in_range(double value, double lo, double hi) { return value >= lo && value < hi; }

}  // namespace

AkGrade grade_ak(const PatientRecord& r) {
  require_finite(r.flat_k, "flat_k");
  require_finite(r.steep_k, "steep_k");
  require_finite(r.refractive_sphere, "refractive_sphere");
  require_finite(r.refractive_cylinder, "refractive_cylinder");
  require_finite(r.thinnest_pachymetry, "thinnest_pachymetry");

  const double mean_k = r.mean_central_k();
  const double refraction = r.myopia_astigmatism();
  const double thinnest = r.thinnest_pachymetry;
  const bool scarred = r.corneal_scarring;

  if (mean_k > kGrade4MeanK || (scarred && thinnest <= kGrade4ScarThinnest)) return AkGrade(4);

  if (mean_k >= kGrade3MeanK && in_range(refraction, kGrade3RefractionLo, kGrade3RefractionHi) &&
      !scarred && in_range(thinnest, kGrade3ThinnestLo, kGrade3ThinnestHi)) {
    return AkGrade(3);
  }

  if (mean_k < kGrade2MeanK && in_range(refraction, kGrade2RefractionLo, kGrade2RefractionHi) &&
      !scarred && thinnest >= kGrade2Thinnest) {
    return AkGrade(2);
  }

  return AkGrade(1);
}

}  // namespace keratoflow::domain
