#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fatigue::util {

/// Splits one CSV line. Double-quoted fields may contain commas; "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line);

std::string_view trim(std::string_view s);

/// Parses a finite or infinite double; empty / malformed text yields nullopt.
std::optional<double> parse_double(std::string_view s);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace fatigue::util
