#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace surveysim::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Lower-cases, maps every non-alphanumeric byte to a space and collapses runs of
/// whitespace. Bytes >= 0x80 (UTF-8 continuation and lead bytes) are kept as-is.
std::string normalize_for_match(std::string_view s);

/// Parses the whole string as a double (leading/trailing blanks allowed).
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_integer(std::string_view s);

/// Shortest representation that round-trips ("58", "12.5", "0.1").
std::string format_number(double value);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

std::string join(const std::vector<std::string> &parts, std::string_view separator);

/// File-name-safe rendering of an identifier.
std::string slug(std::string_view s);

} // namespace surveysim::text
