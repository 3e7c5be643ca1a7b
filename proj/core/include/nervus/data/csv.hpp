#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace nervus::data {

using CsvRow = std::vector<std::string>;

/// RFC 4180 style reader: quoted fields, doubled quotes, CRLF or LF line ends.
/// Blank lines are skipped.
std::vector<CsvRow> parse_csv(std::string_view text);

/// Writes one row, quoting fields that contain a comma, quote or newline.
void write_csv_row(std::ostream& out, const CsvRow& row);

/// Shortest decimal text that reads back to the same float / double.
std::string format_real(float value);
std::string format_real(double value);

}  // namespace nervus::data
