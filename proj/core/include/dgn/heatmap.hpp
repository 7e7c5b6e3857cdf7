#pragma once

// Matrix exports for inspection: 16-bit binary PGM heatmaps and CSV dumps.
// Heatmap scaling is linear, 0 -> 0 (black) and the matrix maximum -> 65535
// (white); negative entries clamp to 0 and an all-zero matrix is all black.

#include <filesystem>
#include <string>

#include "dgn/matrix.hpp"

namespace dgn {

/// "P5\n<cols> <rows>\n65535\n" followed by big-endian 16-bit samples.
std::string encode_pgm16(const Matrix& m);
void write_pgm16(const Matrix& m, const std::filesystem::path& path);

/// One line per row, comma-separated, full double precision.
std::string encode_csv(const Matrix& m);
void write_csv(const Matrix& m, const std::filesystem::path& path);

}  // namespace dgn
