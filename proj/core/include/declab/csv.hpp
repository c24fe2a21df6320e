#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace declab::csv {

/// RFC-4180-style quoting: fields containing comma, quote, or newline are
/// wrapped in double quotes with embedded quotes doubled.
std::string escape_field(std::string_view field);

/// Splits one CSV line into fields, honoring quoted fields.
std::vector<std::string> parse_line(std::string_view line);

/// Deterministic shortest-ish formatting: %.12g, with "inf"/"-inf"/"nan"
/// spelled out.
std::string format_double(double value);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace declab::csv
