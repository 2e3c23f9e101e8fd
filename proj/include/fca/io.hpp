#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace fca::io {

// Writes `contents` to a sibling temp file, then renames it over `path`.
// Readers never observe a partially written file.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

// Shortest round-trip decimal rendering of a double ("%.17g" trimmed).
std::string format_double(double value);

// Fixed two-decimal rendering used for accuracy percents.
std::string format_percent(double value);

}  // namespace fca::io
