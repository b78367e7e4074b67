#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace hraml::io {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Strict full-token parse; surrounding whitespace is ignored.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it into place, so readers never
/// observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string_view trim(std::string_view text);

}  // namespace hraml::io
