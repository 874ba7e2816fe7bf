#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "blocksim/codec.hpp"
#include "blocksim/common.hpp"
#include "blocksim/digest.hpp"

#include "json.hpp"

namespace blocksim {

struct VersionedEntry {
  std::string key;
  std::uint64_t version = 0;  // dense, 1-based
  std::vector<std::uint8_t> value;
  Height commit_block = 0;
};

// Merkle tree over a fixed number of bucket digests. Leaves are padded with
// zero digests up to a power of two; dirty paths are recombined lazily.
class BucketTree {
 public:
  explicit BucketTree(std::uint32_t num_buckets) : num_buckets_(num_buckets) {
    std::uint32_t width = 1;
    while (width < num_buckets_) width <<= 1;
    levels_.emplace_back(width, Digest::zero());
    while (width > 1) {
      width >>= 1;
      levels_.emplace_back(width, Digest::zero());
    }
    rebuild_all();
  }

  static std::uint32_t bucket_of(std::string_view key, std::uint32_t num_buckets) {
    const Digest d = sha256(key);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | d.bytes[i];
    return static_cast<std::uint32_t>(v % num_buckets);
  }

  std::uint32_t num_buckets() const { return num_buckets_; }

  void set_bucket(std::uint32_t index, const Digest& hash) {
    levels_[0][index] = hash;
    dirty_.insert(index);
  }

  const Digest& bucket_hash(std::uint32_t index) const { return levels_[0][index]; }

  Digest root() const {
    flush();
    return levels_.back()[0];
  }

 private:
  void rebuild_all() {
    for (size_t l = 1; l < levels_.size(); ++l)
      for (size_t i = 0; i < levels_[l].size(); ++i)
        levels_[l][i] = sha256_pair(levels_[l - 1][2 * i], levels_[l - 1][2 * i + 1]);
  }

  void flush() const {
    if (dirty_.empty()) return;
    std::set<std::uint32_t> level_dirty = dirty_;
    dirty_.clear();
    for (size_t l = 1; l < levels_.size(); ++l) {
      std::set<std::uint32_t> next;
      for (std::uint32_t i : level_dirty) next.insert(i >> 1);
      for (std::uint32_t i : next)
        levels_[l][i] = sha256_pair(levels_[l - 1][2 * i], levels_[l - 1][2 * i + 1]);
      level_dirty = std::move(next);
    }
  }

  std::uint32_t num_buckets_;
  mutable std::vector<std::vector<Digest>> levels_;  // [0] = leaves
  mutable std::set<std::uint32_t> dirty_;
};

// Versioned key-value state. Every put appends a new version under the
// composite cell "key:version" and moves the "key:latest" pointer, so
// historical reads walk versions exactly the way range queries expect.
//
// The bucket tree commits to all cells. A bucket's digest is the XOR fold of
// its cell digests (a multiset hash), so a put updates its bucket in O(1)
// and only dirty Merkle paths are recombined. Cell digests cover key and
// value, and cell keys are unique within a bucket, so the fold never
// self-cancels.
class StateStore {
 public:
  explicit StateStore(std::uint32_t num_buckets = 1024)
      : num_buckets_(num_buckets), tree_(num_buckets) {}

  StateStore(const StateStore&) = delete;
  StateStore& operator=(const StateStore&) = delete;
  StateStore(StateStore&&) = default;
  StateStore& operator=(StateStore&&) = default;

  std::uint32_t num_buckets() const { return num_buckets_; }

  // Returns the new version number. commit_block may not go backwards.
  std::uint64_t put(std::string_view key, std::span<const std::uint8_t> value,
                    Height commit_block) {
    Meta& meta = meta_[std::string(key)];
    if (meta.latest > 0 && commit_block < meta.latest_commit_block)
      throw StaleCommitError("put at block " + std::to_string(commit_block) +
                             " behind version committed at block " +
                             std::to_string(meta.latest_commit_block));
    const std::uint64_t version = ++meta.latest;
    meta.latest_commit_block = commit_block;

    ByteWriter cell;
    cell.bytes(value);
    cell.u64(commit_block);
    set_cell(version_key(key, version), cell.take());

    ByteWriter latest;
    latest.u64(version);
    set_cell(latest_key(key), latest.take());
    return version;
  }

  std::uint64_t put(std::string_view key, std::string_view value, Height commit_block) {
    const auto bytes = to_bytes(value);
    return put(key, std::span<const std::uint8_t>(bytes.data(), bytes.size()), commit_block);
  }

  bool has_key(std::string_view key) const { return meta_.count(std::string(key)) != 0; }

  std::uint64_t latest_version(std::string_view key) const {
    auto it = meta_.find(std::string(key));
    return it == meta_.end() ? 0 : it->second.latest;
  }

  std::optional<std::vector<std::uint8_t>> get_latest(std::string_view key) const {
    auto it = meta_.find(std::string(key));
    if (it == meta_.end()) return std::nullopt;
    return get_version(key, it->second.latest)->first;
  }

  std::optional<std::pair<std::vector<std::uint8_t>, Height>> get_version(
      std::string_view key, std::uint64_t version) const {
    auto it = cells_.find(version_key(key, version));
    if (it == cells_.end()) return std::nullopt;
    ByteReader r(it->second);
    auto value = r.bytes();
    const Height commit_block = r.u64();
    return std::make_pair(std::move(value), commit_block);
  }

  // Versions whose commit block falls in [start_block, end_block), newest
  // first. Walks from the latest version downward and stops at the first
  // version older than the range.
  std::vector<std::pair<std::vector<std::uint8_t>, Height>> query_account_block_range(
      std::string_view key, Height start_block, Height end_block) const {
    auto it = meta_.find(std::string(key));
    if (it == meta_.end()) throw UnknownKeyError("no versions for key: " + std::string(key));
    std::vector<std::pair<std::vector<std::uint8_t>, Height>> out;
    for (std::uint64_t v = it->second.latest; v >= 1; --v) {
      auto cell = get_version(key, v);
      if (cell->second >= start_block && cell->second < end_block) {
        out.push_back(std::move(*cell));
      } else if (cell->second < start_block) {
        break;
      }
    }
    return out;
  }

  struct TxnSummary {
    std::string from;
    std::string to;
    std::int64_t value = 0;
  };

  static std::vector<std::uint8_t> encode_txn_summaries(const std::vector<TxnSummary>& list) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(list.size()));
    for (const auto& t : list) {
      w.str(t.from);
      w.str(t.to);
      w.i64(t.value);
    }
    return w.take();
  }

  static std::vector<TxnSummary> decode_txn_summaries(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const auto n = r.u32();
    std::vector<TxnSummary> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      TxnSummary t;
      t.from = r.str();
      t.to = r.str();
      t.value = r.i64();
      out.push_back(std::move(t));
    }
    return out;
  }

  // Transfer triples recorded for one block under the well-known key
  // "block:<height>".
  std::vector<TxnSummary> query_block_txn_list(Height height) const {
    auto cell = get_latest("block:" + std::to_string(height));
    if (!cell) throw UnknownBlockError("no transaction list for block " + std::to_string(height));
    return decode_txn_summaries(*cell);
  }

  Digest state_root() const { return tree_.root(); }

  // Raw cell walk in key order (snapshotting, rebuild oracles).
  template <typename Fn>
  void for_each_cell(Fn&& fn) const {
    for (const auto& [k, v] : cells_) fn(k, v);
  }

  std::vector<VersionedEntry> entries() const {
    std::vector<VersionedEntry> out;
    for (const auto& [key, meta] : meta_) {
      for (std::uint64_t v = 1; v <= meta.latest; ++v) {
        auto cell = get_version(key, v);
        out.push_back(VersionedEntry{key, v, std::move(cell->first), cell->second});
      }
    }
    return out;
  }

  // JSON-lines snapshot, one VersionedEntry per line, values in lowercase hex.
  void dump_snapshot(std::ostream& os) const {
    static constexpr char kDigits[] = "0123456789abcdef";
    for (const auto& e : entries()) {
      std::string hex;
      hex.reserve(e.value.size() * 2);
      for (auto b : e.value) {
        hex.push_back(kDigits[b >> 4]);
        hex.push_back(kDigits[b & 0xf]);
      }
      nlohmann::json j{{"key", e.key},
                       {"version", e.version},
                       {"value", hex},
                       {"commit_block", e.commit_block}};
      os << j.dump() << '\n';
    }
  }

 private:
  struct Meta {
    std::uint64_t latest = 0;
    Height latest_commit_block = 0;
  };

  static std::string version_key(std::string_view key, std::uint64_t version) {
    return std::string(key) + ":" + std::to_string(version);
  }

  static std::string latest_key(std::string_view key) { return std::string(key) + ":latest"; }

  void set_cell(std::string cell_key, std::vector<std::uint8_t> cell_value) {
    const std::uint32_t bucket = BucketTree::bucket_of(cell_key, num_buckets_);
    auto [it, inserted] = cells_.insert_or_assign(std::move(cell_key), std::move(cell_value));
    Digest fold = tree_.bucket_hash(bucket);
    if (!inserted) xor_into(fold, cell_hashes_.at(it->first));  // retract the old digest
    const Digest cell_hash = hash_cell(it->first, it->second);
    cell_hashes_[it->first] = cell_hash;
    xor_into(fold, cell_hash);
    tree_.set_bucket(bucket, fold);
  }

  static void xor_into(Digest& acc, const Digest& d) {
    for (size_t i = 0; i < 32; ++i) acc.bytes[i] ^= d.bytes[i];
  }

  static Digest hash_cell(std::string_view key, const std::vector<std::uint8_t>& value) {
    ByteWriter w;
    w.str(key);
    w.bytes(value);
    return sha256(w.data());
  }

  std::uint32_t num_buckets_;
  std::map<std::string, std::vector<std::uint8_t>> cells_;  // composite key -> cell
  std::map<std::string, Digest, std::less<>> cell_hashes_;
  std::map<std::string, Meta> meta_;                        // logical key -> version meta
  mutable BucketTree tree_;
};

}  // namespace blocksim
