#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace popest::text {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);
/// Fixed-point with the given number of decimals ("%.*f").
std::string format_fixed(double value, int decimals);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

/// One CSV record (RFC 4180 quoting). Fields containing the separator, a
/// quote or a newline must be quoted.
std::vector<std::string> parse_csv_line(std::string_view line,
                                        std::size_t line_number);
std::string csv_escape(std::string_view field);
std::string csv_join(const std::vector<std::string>& fields);

/// Lines without the trailing '\n' (a trailing '\r' is dropped too).
std::vector<std::string> split_lines(std::string_view content);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

}  // namespace popest::text
