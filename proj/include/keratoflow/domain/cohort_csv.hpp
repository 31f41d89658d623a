#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "keratoflow/domain/record.hpp"

namespace keratoflow::domain {

/// Column order written by write_cohort_csv. Readers accept any order; the
/// ak_grade column may be absent (all records unlabeled) or empty per row.
const std::vector<std::string>& cohort_csv_columns();

/// Parses the cohort CSV format. udva/cdva accept logMAR numbers or Snellen
/// fractions ("6/12", "20/40"), which are converted to logMAR. Every record
/// is validated; errors name the source, line and column.
std::vector<PatientRecord> parse_cohort_csv(std::istream& in, std::string_view source_name);
std::vector<PatientRecord> read_cohort_csv(const std::filesystem::path& path);

std::string format_cohort_csv(std::span<const PatientRecord> records);
void write_cohort_csv(const std::filesystem::path& path, std::span<const PatientRecord> records);

/// logMAR of a Snellen fraction numerator/denominator: log10(den / num).
double snellen_to_logmar(std::string_view fraction);

}  // namespace keratoflow::domain
