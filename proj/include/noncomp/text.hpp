#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace noncomp::text {

/// Splits on a single delimiter character, keeping empty fields.
std::vector<std::string> split(std::string_view s, char delim);

/// Splits on runs of ASCII whitespace, dropping empty fields.
std::vector<std::string> split_ws(std::string_view s);

std::string_view trim(std::string_view s);

/// Collapses whitespace runs to one space and strips both ends.
std::string normalize(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool parse_int(std::string_view s, std::int64_t& out);
bool parse_double(std::string_view s, double& out);

/// Fixed-point rendering with `digits` decimals; "-0.00" prints as "0.00".
std::string fixed(double value, int digits = 2);

std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Writes via a temporary sibling and renames so readers never see a partial file.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace noncomp::text
