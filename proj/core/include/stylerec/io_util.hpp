// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace stylerec {

/// Shortest decimal form that round-trips the exact double ("%.17g" fallback).
std::string format_double(double x);

std::vector<std::string> split(std::string_view s, char delim);

/// strtod with full-string validation; throws ParseError on junk.
double parse_double(std::string_view s, const std::string& context);
std::int64_t parse_int(std::string_view s, const std::string& context);
std::uint64_t parse_uint(std::string_view s, const std::string& context);

/// Reads a whole text file line by line, stripping a trailing '\r' if any.
std::vector<std::string> read_lines(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

bool file_exists(const std::string& path);

}  // namespace stylerec
