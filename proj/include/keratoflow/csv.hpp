#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace keratoflow {

/// A parsed comma-separated file: header row plus data rows. Fields may be
/// double-quoted ("" escapes a quote).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column, or npos.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::istream& in, std::string_view source_name);
CsvTable read_csv(const std::filesystem::path& path);

/// Quotes the field if it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

/// Shortest text that parses back to exactly `value`.
std::string format_double(double value);

/// Strict numeric parse of a whole field; throws ValidationError mentioning `what`.
double parse_double(std::string_view text, std::string_view what);
long parse_long(std::string_view text, std::string_view what);

/// Writes `content` to `path`, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace keratoflow
