#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace phystrack {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Strict full-string parse; throws std::invalid_argument on failure.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
/// Splits on runs of whitespace.
std::vector<std::string_view> split_ws(std::string_view s);

}  // namespace phystrack
