#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "blocksim/digest.hpp"

namespace blocksim {

// Canonical binary encoding: fixed-width big-endian integers, u32
// length-prefixed byte strings, fields in declaration order. The layout is
// documented in the README and must not change between releases; block and
// transaction identities are hashes over these bytes.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }

  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8)
      buf_.push_back(static_cast<std::uint8_t>(v >> shift));
  }

  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
      buf_.push_back(static_cast<std::uint8_t>(v >> shift));
  }

  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

  void bytes(std::span<const std::uint8_t> v) {
    u32(static_cast<std::uint32_t>(v.size()));
    buf_.insert(buf_.end(), v.begin(), v.end());
  }

  void bytes(const std::vector<std::uint8_t>& v) {
    bytes(std::span<const std::uint8_t>(v.data(), v.size()));
  }

  void str(std::string_view v) {
    u32(static_cast<std::uint32_t>(v.size()));
    buf_.insert(buf_.end(), v.begin(), v.end());
  }

  void digest(const Digest& d) { buf_.insert(buf_.end(), d.bytes.begin(), d.bytes.end()); }

  const std::vector<std::uint8_t>& data() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}
  explicit ByteReader(const std::vector<std::uint8_t>& data)
      : data_(data.data(), data.size()) {}

  std::uint8_t u8() { return take(1)[0]; }

  std::uint32_t u32() {
    auto b = take(4);
    return std::uint32_t(b[0]) << 24 | std::uint32_t(b[1]) << 16 | std::uint32_t(b[2]) << 8 |
           std::uint32_t(b[3]);
  }

  std::uint64_t u64() {
    std::uint64_t v = 0;
    auto b = take(8);
    for (int i = 0; i < 8; ++i) v = v << 8 | b[i];
    return v;
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

  std::vector<std::uint8_t> bytes() {
    auto n = u32();
    auto b = take(n);
    return {b.begin(), b.end()};
  }

  std::string str() {
    auto n = u32();
    auto b = take(n);
    return {reinterpret_cast<const char*>(b.data()), b.size()};
  }

  Digest digest() {
    auto b = take(32);
    Digest d;
    std::copy(b.begin(), b.end(), d.bytes.begin());
    return d;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  std::span<const std::uint8_t> take(size_t n) {
    if (pos_ + n > data_.size()) throw CodecError("truncated input");
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::span<const std::uint8_t> data_;
  size_t pos_ = 0;
};

// Typed argument carried by a transaction.
using Value = std::variant<std::int64_t, std::uint64_t, std::string, std::vector<std::uint8_t>>;

inline void encode_value(ByteWriter& w, const Value& v) {
  switch (v.index()) {
    case 0:
      w.u8(0);
      w.i64(std::get<0>(v));
      break;
    case 1:
      w.u8(1);
      w.u64(std::get<1>(v));
      break;
    case 2:
      w.u8(2);
      w.str(std::get<2>(v));
      break;
    default:
      w.u8(3);
      w.bytes(std::get<3>(v));
      break;
  }
}

inline Value decode_value(ByteReader& r) {
  switch (r.u8()) {
    case 0: return Value(r.i64());
    case 1: return Value(r.u64());
    case 2: return Value(r.str());
    case 3: return Value(r.bytes());
    default: throw CodecError("bad value tag");
  }
}

inline std::vector<std::uint8_t> to_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()),
          reinterpret_cast<const std::uint8_t*>(s.data()) + s.size()};
}

inline std::string to_string(std::span<const std::uint8_t> b) {
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

}  // namespace blocksim
