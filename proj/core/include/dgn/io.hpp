#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace dgn {

/// Reads a whole file into memory. Throws IoError on failure.
std::string read_file(const std::filesystem::path& path);

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so
/// a failed write never leaves a partial file behind. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace dgn
