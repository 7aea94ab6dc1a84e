#pragma once

// Little-endian byte stream helpers shared by the snapshot and checkpoint codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace dcbf::detail {

class ByteWriter {
 public:
  void raw(std::string_view s) { out_.append(s); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { uint(v, 2); }
  void u32(std::uint32_t v) { uint(v, 4); }
  void u64(std::uint64_t v) { uint(v, 8); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v), 8); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }
  std::string take() { return std::move(out_); }

 private:
  void uint(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
  }
  std::string out_;
};

// Reads fail by returning false; callers convert that into their own error type.
class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  bool raw(std::size_t n, std::string_view& out) {
    if (in_.size() - pos_ < n) return false;
    out = in_.substr(pos_, n);
    pos_ += n;
    return true;
  }
  bool u8(std::uint8_t& v) {
    std::uint64_t w;
    if (!uint(w, 1)) return false;
    v = static_cast<std::uint8_t>(w);
    return true;
  }
  bool u16(std::uint16_t& v) {
    std::uint64_t w;
    if (!uint(w, 2)) return false;
    v = static_cast<std::uint16_t>(w);
    return true;
  }
  bool u32(std::uint32_t& v) {
    std::uint64_t w;
    if (!uint(w, 4)) return false;
    v = static_cast<std::uint32_t>(w);
    return true;
  }
  bool u64(std::uint64_t& v) { return uint(v, 8); }
  bool f64(double& v) {
    std::uint64_t w;
    if (!uint(w, 8)) return false;
    v = std::bit_cast<double>(w);
    return true;
  }
  bool str(std::string& s) {
    std::uint32_t n;
    std::string_view view;
    if (!u32(n) || !raw(n, view)) return false;
    s.assign(view);
    return true;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  bool uint(std::uint64_t& v, int n) {
    if (in_.size() - pos_ < static_cast<std::size_t>(n)) return false;
    v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += n;
    return true;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace dcbf::detail
