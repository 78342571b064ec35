#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace wgr {

/// Writes `content` to a sibling temp file and renames it over `path`, so
/// readers never observe a truncated file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Shortest text that parses back to the identical double.
std::string format_double(double v);

/// Splits on `sep` and trims surrounding whitespace from every field.
std::vector<std::string> split_trim(std::string_view text, char sep);

/// Keeps large training temporaries on the heap instead of fresh mmap pages
/// (glibc only; a no-op elsewhere). Call once at program start.
void keep_large_allocations();

}  // namespace wgr
