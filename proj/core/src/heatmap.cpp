#include "dgn/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dgn/error.hpp"
#include "dgn/io.hpp"

namespace dgn {

std::string encode_pgm16(const Matrix& m) {
  require(!m.empty(), "cannot export an empty matrix");
  double peak = 0.0;
  for (double v : m.values()) peak = std::max(peak, v);
  std::string out = "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n65535\n";
  out.reserve(out.size() + 2 * m.size());
  for (double v : m.values()) {
    const double scaled = peak > 0.0 ? std::clamp(v, 0.0, peak) / peak * 65535.0 : 0.0;
    const auto sample = static_cast<unsigned>(std::lround(scaled));
    out.push_back(static_cast<char>((sample >> 8) & 0xFFu));
    out.push_back(static_cast<char>(sample & 0xFFu));
  }
  return out;
}

void write_pgm16(const Matrix& m, const std::filesystem::path& path) { write_file_atomic(path, encode_pgm16(m)); }

std::string encode_csv(const Matrix& m) {
  std::string out;
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      if (c > 0) out.push_back(',');
      out += buf;
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Matrix& m, const std::filesystem::path& path) { write_file_atomic(path, encode_csv(m)); }

}  // namespace dgn
