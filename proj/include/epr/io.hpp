#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace epr {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kMetaKey = "_meta";

// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

// Splits into lines, dropping the trailing newline and skipping nothing.
std::vector<std::string> split_lines(std::string_view text);

// Shortest round-trip decimal form of a float / double.
std::string format_float(float value);
std::string format_double(double value);

}  // namespace epr
