#pragma once

#include <cstdint>
#include <string_view>

#include "blocksim/digest.hpp"

namespace blocksim {

// splitmix64. Used both as a cheap standalone generator and to derive
// independent stream seeds from one master seed.
struct SplitMix64 {
  std::uint64_t state = 0;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

// xoshiro256** — fixed algorithm so streams reproduce across platforms and
// standard libraries. All simulation randomness flows through this.
class Rng {
 public:
  Rng() : Rng(0) {}

  explicit Rng(std::uint64_t seed) {
    SplitMix64 sm{seed};
    for (auto& s : s_) s = sm.next();
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [lo, hi], inclusive. Rejection-free multiply-shift reduction.
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo + 1;
    if (span == 0) return next_u64();  // full 64-bit range
    return lo + mul_hi(next_u64(), span);
  }

  double unit() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool chance(double p) { return unit() < p; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t mul_hi(std::uint64_t a, std::uint64_t b) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) >> 64);
  }

  std::uint64_t s_[4];
};

// Stable stream derivation: seed -> domain-tagged child seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view domain,
                                 std::uint64_t index) {
  std::vector<std::uint8_t> buf;
  buf.reserve(domain.size() + 16);
  for (int shift = 56; shift >= 0; shift -= 8)
    buf.push_back(static_cast<std::uint8_t>(master >> shift));
  buf.insert(buf.end(), domain.begin(), domain.end());
  for (int shift = 56; shift >= 0; shift -= 8)
    buf.push_back(static_cast<std::uint8_t>(index >> shift));
  const Digest d = sha256(buf);
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = out << 8 | d.bytes[i];
  return out;
}

}  // namespace blocksim
