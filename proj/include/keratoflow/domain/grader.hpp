#pragma once

#include "keratoflow/domain/record.hpp"

namespace keratoflow::domain {

/// Rule-based Amsler-Krumeich grade from mean central K, combined
/// myopia + astigmatism, thinnest pachymetry and central scarring.
///
/// Grades are tested from 4 down to 2, first match wins, grade 1 is the
/// fallback. Ranges include their lower bound.
///   4: mean K > 55 D, or central scarring with thinnest <= 300 um
///   3: mean K >= 53 D, refraction in [8, 10) D, no scarring, thinnest in [300, 400) um
///   2: mean K < 53 D, refraction in [5, 8) D, no scarring, thinnest >= 400 um
///
/// Throws ValidationError naming the first non-finite field it reads.
AkGrade grade_ak(const PatientRecord& record);

}  // namespace keratoflow::domain
