#pragma once

#include <map>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

#include "blocksim/block.hpp"
#include "blocksim/rng.hpp"

namespace blocksim {

using u256 = boost::multiprecision::uint256_t;
using u512 = boost::multiprecision::uint512_t;

inline u256 digest_to_u256(const Digest& d) {
  u256 v = 0;
  for (auto b : d.bytes) v = (v << 8) | b;
  return v;
}

inline u256 u256_pow2(unsigned bit) { return u256(1) << bit; }

inline std::string u256_to_hex(const u256& v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

inline u256 u256_from_hex(const std::string& hex) {
  u256 v;
  std::istringstream is(hex);
  is >> std::hex >> v;
  if (is.fail()) throw ConfigError("bad 256-bit hex value: " + hex);
  return v;
}

// Puzzle digest: H(nonce || H(header-without-nonce)), read big-endian.
inline Digest puzzle_digest(const Digest& header_base, std::uint64_t nonce) {
  ByteWriter w;
  w.u64(nonce);
  w.digest(header_base);
  return sha256(w.data());
}

inline bool pow_check(const Digest& header_base, std::uint64_t nonce, const u256& threshold) {
  return digest_to_u256(puzzle_digest(header_base, nonce)) < threshold;
}

struct PowSolution {
  std::uint64_t nonce = 0;
  std::uint64_t tries = 0;  // candidates drawn, one per simulated tick
};

// Searches nonce candidates drawn from the rng stream until the puzzle digest
// falls below the threshold. Expected tries = 2^256 / t.
inline PowSolution pow_solve(const BlockHeader& header, const u256& threshold, Rng& rng) {
  if (threshold == 0) throw std::invalid_argument("pow threshold must be positive");
  const Digest base = hash_header_base(header);
  PowSolution s;
  for (;;) {
    ++s.tries;
    s.nonce = rng.next_u64();
    if (pow_check(base, s.nonce, threshold)) return s;
  }
}

inline bool pow_verify(const BlockHeader& header, const u256& threshold) {
  return pow_check(hash_header_base(header), header.nonce, threshold);
}

// Stake table: balances plus the last height each node proposed at.
struct StakeTable {
  struct Entry {
    std::uint64_t balance = 0;
    Height last_proposed = 0;
  };

  std::map<std::string, Entry> entries;

  bool contains(const std::string& miner) const { return entries.count(miner) != 0; }

  std::uint64_t balance(const std::string& miner) const {
    auto it = entries.find(miner);
    return it == entries.end() ? 0 : it->second.balance;
  }

  std::uint64_t total_balance() const {
    std::uint64_t total = 0;
    for (const auto& [_, e] : entries) total += e.balance;
    return total;
  }
};

// Stake function: balance times the age of the chain tip, in ticks.
inline std::uint64_t nxt_stake(const std::string& miner, const StakeTable& stake,
                               Tick tip_timestamp, Tick now) {
  const std::uint64_t bal = stake.balance(miner);
  const std::uint64_t age = now >= tip_timestamp ? now - tip_timestamp : 0;
  return bal * age;
}

struct UnknownMinerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// H(n || H(b)) < s(M) * t, with the product saturating at 2^256 (every digest
// passes). The caller supplies the already-evaluated stake function value.
inline bool pos_check(const BlockHeader& header, const u256& base_threshold,
                      std::uint64_t stake_value) {
  const u512 limit = u512(base_threshold) * stake_value;
  if (limit >= (u512(1) << 256)) return true;
  const Digest d = puzzle_digest(hash_header_base(header), header.nonce);
  return u512(digest_to_u256(d)) < limit;
}

inline bool pos_check(const BlockHeader& header, const u256& base_threshold,
                      const StakeTable& stake, const std::string& miner) {
  if (!stake.contains(miner)) throw UnknownMinerError("unknown miner: " + miner);
  return pos_check(header, base_threshold, stake.balance(miner));
}

// Work difficulty from a target expected interval: with one candidate per
// tick per miner, expected block interval = 2^256 / (t * miners).
inline u256 pow_threshold_for_interval(Tick interval, std::uint32_t miners) {
  if (interval == 0 || miners == 0) throw ConfigError("interval and miners must be positive");
  u512 full = u512(1) << 256;
  u512 t = full / (u512(interval) * miners);
  if (t == 0) t = 1;
  return u256(t);
}

}  // namespace blocksim
