#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "blocksim/common.hpp"

namespace blocksim {

// 256-bit digest. Byte 0 is the most significant when the digest is read as
// an integer, so lexicographic byte order equals numeric order.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  static Digest zero() { return {}; }

  bool is_zero() const {
    for (auto b : bytes)
      if (b != 0) return false;
    return true;
  }

  auto operator<=>(const Digest&) const = default;

  std::string hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (auto b : bytes) {
      out.push_back(kDigits[b >> 4]);
      out.push_back(kDigits[b & 0xf]);
    }
    return out;
  }

  static Digest from_hex(std::string_view hex) {
    if (hex.size() != 64) throw CodecError("digest hex must be 64 chars");
    auto nibble = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      throw CodecError("bad hex digit");
    };
    Digest d;
    for (size_t i = 0; i < 32; ++i)
      d.bytes[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    return d;
  }
};

struct DigestHash {
  size_t operator()(const Digest& d) const {
    std::uint64_t v;
    std::memcpy(&v, d.bytes.data(), sizeof v);
    return static_cast<size_t>(v);
  }
};

// Pre-fetched digest implementation: re-fetching per call through the
// provider machinery costs more than the hash itself.
inline const EVP_MD* sha256_md() {
  thread_local EVP_MD* md = EVP_MD_fetch(nullptr, "SHA256", nullptr);
  return md;
}

inline Digest sha256(std::span<const std::uint8_t> data) {
  thread_local EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  Digest d;
  unsigned int len = 0;
  EVP_DigestInit_ex2(ctx, sha256_md(), nullptr);
  EVP_DigestUpdate(ctx, data.data(), data.size());
  EVP_DigestFinal_ex(ctx, d.bytes.data(), &len);
  return d;
}

inline Digest sha256(const std::vector<std::uint8_t>& data) {
  return sha256(std::span<const std::uint8_t>(data.data(), data.size()));
}

inline Digest sha256(std::string_view data) {
  return sha256(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

inline Digest sha256_pair(const Digest& a, const Digest& b) {
  std::array<std::uint8_t, 64> buf;
  std::memcpy(buf.data(), a.bytes.data(), 32);
  std::memcpy(buf.data() + 32, b.bytes.data(), 32);
  return sha256(std::span<const std::uint8_t>(buf.data(), buf.size()));
}

// Streaming hasher for traces and large inputs.
class Sha256Stream {
 public:
  Sha256Stream() : ctx_(EVP_MD_CTX_new()) { EVP_DigestInit_ex2(ctx_, sha256_md(), nullptr); }
  ~Sha256Stream() { EVP_MD_CTX_free(ctx_); }
  Sha256Stream(const Sha256Stream&) = delete;
  Sha256Stream& operator=(const Sha256Stream&) = delete;

  void update(std::string_view data) { EVP_DigestUpdate(ctx_, data.data(), data.size()); }

  Digest finish() {
    Digest d;
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, d.bytes.data(), &len);
    return d;
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace blocksim
