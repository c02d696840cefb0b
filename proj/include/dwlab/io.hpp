#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dwlab::io {

/// Shortest-safe decimal form: 17 significant digits, round-trips through
/// parse_real bit-exactly.
std::string format_real(double v);

double parse_real(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string> split_csv_line(std::string_view line);

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace dwlab::io
