#include "keratoflow/domain/cohort_csv.hpp"

#include <cmath>
#include <functional>
#include <istream>
#include <sstream>

#include "keratoflow/csv.hpp"
#include "keratoflow/error.hpp"

namespace keratoflow::domain {

namespace {

struct Column {
  std::string name;
  std::function<void(PatientRecord&, std::string_view)> parse;
  std::function<std::string(const PatientRecord&)> format;
};

bool parse_flag(std::string_view text, std::string_view field) {
  if (text == "0") return false;
  if (text == "1") return true;
  throw ValidationError(std::string(field) + ": expected 0 or 1, got '" + std::string(text) + "'");
}

double parse_acuity(std::string_view text, std::string_view field) {
  if (text.find('/') != std::string_view::npos) return snellen_to_logmar(text);
  return parse_double(text, field);
}

#define KF_NUMBER(field)                                                                  \
  Column {                                                                                \
    #field, [](PatientRecord& r, std::string_view t) { r.field = parse_double(t, #field); }, \
        [](const PatientRecord& r) { return format_double(r.field); }                      \
  }
#define KF_FLAG(field)                                                                   \
  Column {                                                                               \
    #field, [](PatientRecord& r, std::string_view t) { r.field = parse_flag(t, #field); }, \
        [](const PatientRecord& r) { return std::string(r.field ? "1" : "0"); }          \
  }
#define KF_ACUITY(field)                                                                   \
  Column {                                                                                 \
    #field, [](PatientRecord& r, std::string_view t) { r.field = parse_acuity(t, #field); }, \
        [](const PatientRecord& r) { return format_double(r.field); }                       \
  }

const std::vector<Column>& columns() {
  static const std::vector<Column> cols = {
      {"patient_id", [](PatientRecord& r, std::string_view t) { r.patient_id = std::string(t); },
       [](const PatientRecord& r) { return csv_escape(r.patient_id); }},
      {"eye", [](PatientRecord& r, std::string_view t) { r.eye = eye_from_string(t); },
       [](const PatientRecord& r) { return std::string(to_string(r.eye)); }},
      {"gender", [](PatientRecord& r, std::string_view t) { r.gender = gender_from_string(t); },
       [](const PatientRecord& r) { return std::string(to_string(r.gender)); }},
      KF_NUMBER(age),
      {"nationality",
       [](PatientRecord& r, std::string_view t) { r.nationality = std::string(t); },
       [](const PatientRecord& r) { return csv_escape(r.nationality); }},
      KF_FLAG(diabetes),
      KF_FLAG(atopy),
      KF_FLAG(allergy),
      KF_FLAG(hypertension),
      KF_FLAG(other_disease),
      KF_NUMBER(years_since_diagnosis),
      KF_FLAG(known_eye_history),
      KF_FLAG(family_history),
      {"eye_rubbing",
       [](PatientRecord& r, std::string_view t) {
         r.eye_rubbing = static_cast<int>(parse_long(t, "eye_rubbing"));
       },
       [](const PatientRecord& r) { return std::to_string(r.eye_rubbing); }},
      {"primary_optical_aid",
       [](PatientRecord& r, std::string_view t) {
         r.primary_optical_aid = optical_aid_from_string(t);
       },
       [](const PatientRecord& r) { return std::string(to_string(r.primary_optical_aid)); }},
      KF_ACUITY(udva),
      KF_ACUITY(cdva),
      KF_FLAG(hydrops),
      KF_FLAG(corneal_scarring),
      KF_FLAG(vogts_striae),
      KF_FLAG(fleischers_ring),
      KF_NUMBER(refractive_sphere),
      KF_NUMBER(refractive_cylinder),
      KF_NUMBER(refractive_axis),
      KF_NUMBER(flat_k),
      KF_NUMBER(steep_k),
      KF_NUMBER(thinnest_pachymetry),
      KF_NUMBER(central_pachymetry),
      KF_NUMBER(thinnest_loc_x),
      KF_NUMBER(thinnest_loc_y),
      {"ak_grade",
       [](PatientRecord& r, std::string_view t) {
         if (t.empty()) {
           r.ak_grade.reset();
         } else {
           r.ak_grade = AkGrade(static_cast<int>(parse_long(t, "ak_grade")));
         }
       },
       [](const PatientRecord& r) {
         return r.ak_grade ? std::to_string(r.ak_grade->value()) : std::string();
       }},
  };
  return cols;
}

#undef KF_NUMBER
#undef KF_FLAG
#undef KF_ACUITY

}  // namespace

const std::vector<std::string>& cohort_csv_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : columns()) n.push_back(c.name);
    return n;
  }();
  return names;
}

double snellen_to_logmar(std::string_view fraction) {
  const auto slash = fraction.find('/');
  if (slash == std::string_view::npos) {
    throw ValidationError("'" + std::string(fraction) + "' is not a Snellen fraction");
  }
  const double numerator = parse_double(fraction.substr(0, slash), "Snellen numerator");
  const double denominator = parse_double(fraction.substr(slash + 1), "Snellen denominator");
  if (!(numerator > 0.0) || !(denominator > 0.0)) {
    throw ValidationError("Snellen fraction '" + std::string(fraction) + "' must be positive");
  }
  return std::log10(denominator / numerator);
}

std::vector<PatientRecord> parse_cohort_csv(std::istream& in, std::string_view source_name) {
  const CsvTable table = parse_csv(in, source_name);
  const auto& cols = columns();
  std::vector<std::size_t> position(cols.size(), std::string::npos);
  for (std::size_t h = 0; h < table.header.size(); ++h) {
    bool known = false;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cols[c].name == table.header[h]) {
        if (position[c] != std::string::npos) {
          throw ValidationError(std::string(source_name) + ": duplicate column '" +
                                table.header[h] + "'");
        }
        position[c] = h;
        known = true;
      }
    }
    if (!known) {
      throw ValidationError(std::string(source_name) + ": unknown column '" + table.header[h] +
                            "'");
    }
  }
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (position[c] == std::string::npos && cols[c].name != "ak_grade") {
      throw ValidationError(std::string(source_name) + ": missing column '" + cols[c].name + "'");
    }
  }

  std::vector<PatientRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string where = std::string(source_name) + " record " + std::to_string(r + 1);
    PatientRecord record;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (position[c] == std::string::npos) continue;
      const std::string& text = table.rows[r][position[c]];
      if (text.empty() && cols[c].name != "ak_grade") {
        throw ValidationError(where + ": missing value for '" + cols[c].name + "'");
      }
      try {
        cols[c].parse(record, text);
      } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
      }
    }
    try {
      validate(record);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<PatientRecord> read_cohort_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  return parse_cohort_csv(in, path.string());
}

std::string format_cohort_csv(std::span<const PatientRecord> records) {
  std::string out;
  const auto& cols = columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out.push_back(',');
    out += cols[c].name;
  }
  out.push_back('\n');
  for (const auto& record : records) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out.push_back(',');
      out += cols[c].format(record);
    }
    out.push_back('\n');
  }
  return out;
}

void write_cohort_csv(const std::filesystem::path& path, std::span<const PatientRecord> records) {
  write_text_file(path, format_cohort_csv(records));
}

}  // namespace keratoflow::domain
