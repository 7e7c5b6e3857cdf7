#pragma once

// Little-endian encoding helpers shared by the on-disk formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "dgn/error.hpp"

namespace dgn::detail {

class ByteWriter {
 public:
  void magic(std::string_view m) { out_.append(m); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void reserve(std::size_t n) { out_.reserve(n); }

  std::string take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }

  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  // Checks the 4-byte magic and the version word that follows it.
  void header(std::string_view magic, std::uint32_t version) {
    if (bytes_.size() < magic.size() || bytes_.substr(0, magic.size()) != magic)
      throw FormatError("bad magic: expected \"" + std::string(magic) + "\"");
    pos_ = magic.size();
    std::uint32_t v = u32();
    if (v != version)
      throw FormatError("unsupported " + std::string(magic) + " version " + std::to_string(v));
  }

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void expect_remaining(std::size_t n, std::string_view what) const {
    if (remaining() < n) throw IoError("truncated " + std::string(what) + " payload");
  }

  void expect_end(std::string_view what) const {
    if (remaining() != 0) throw FormatError("trailing bytes after " + std::string(what) + " payload");
  }

 private:
  std::uint64_t get(int bytes) {
    if (remaining() < static_cast<std::size_t>(bytes)) throw IoError("truncated payload");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += bytes;
    return v;
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace dgn::detail
