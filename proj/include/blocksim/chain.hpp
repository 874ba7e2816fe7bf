#pragma once

#include <algorithm>
#include <functional>
#include <ostream>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "blocksim/block.hpp"

#include "json.hpp"

namespace blocksim {

enum class ForkChoiceMode {
  LongestChain,  // max height, ties to the smaller head digest
  Finalized,     // unique certified sequence; conflicts are a safety violation
};

enum class AppendResult {
  Appended,
  Duplicate,        // idempotent no-op
  UnknownParent,    // buffered until the parent arrives
  InvalidCert,
};

// Block forest plus fork bookkeeping. Pure value-semantics bookkeeping: the
// engine-specific certificate check is injected, and all mutation happens on
// the simulation thread.
class ChainView {
 public:
  using CertVerifier = std::function<bool(const Block&)>;

  ChainView(BlockPtr genesis, ForkChoiceMode mode, std::uint32_t confirmation_depth,
            CertVerifier verify_cert = {})
      : mode_(mode), confirmation_depth_(confirmation_depth), verify_cert_(std::move(verify_cert)),
        genesis_hash_(genesis->hash()) {
    blocks_.emplace(genesis_hash_, genesis);
    heads_.insert(genesis_hash_);
    main_ = {genesis_hash_};
    main_set_.insert(genesis_hash_);
  }

  AppendResult append(BlockPtr b) {
    const Digest h = b->hash();
    if (blocks_.count(h)) return AppendResult::Duplicate;
    if (!blocks_.count(b->header.parent_hash)) {
      orphans_[b->header.parent_hash].push_back(b);
      return AppendResult::UnknownParent;
    }
    if (verify_cert_ && !verify_cert_(*b)) return AppendResult::InvalidCert;
    insert_connected(h, std::move(b));
    connect_orphans(h);
    return AppendResult::Appended;
  }

  std::vector<Digest> fork_choice(ForkChoiceMode mode) const {
    if (mode == ForkChoiceMode::Finalized) check_finalized_safety();
    Digest best = best_head();
    std::vector<Digest> path;
    for (Digest cur = best;; cur = blocks_.at(cur)->header.parent_hash) {
      path.push_back(cur);
      if (cur == genesis_hash_) break;
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  // (total non-genesis blocks ever connected, blocks on the main branch, excess)
  struct ForkDelta {
    std::uint64_t total_blocks = 0;
    std::uint64_t main_blocks = 0;
    std::uint64_t delta = 0;
    double ratio() const { return total_blocks == 0 ? 1.0 : double(main_blocks) / double(total_blocks); }
  };

  ForkDelta fork_delta() const {
    ForkDelta d;
    d.total_blocks = total_appended_;
    d.main_blocks = main_.size() - 1;
    d.delta = d.total_blocks - d.main_blocks;
    return d;
  }

  const std::vector<Digest>& main_branch() const { return main_; }
  bool on_main(const Digest& h) const { return main_set_.count(h) != 0; }
  bool contains(const Digest& h) const { return blocks_.count(h) != 0; }
  const BlockPtr& block(const Digest& h) const { return blocks_.at(h); }
  const BlockPtr* find(const Digest& h) const {
    auto it = blocks_.find(h);
    return it == blocks_.end() ? nullptr : &it->second;
  }

  const Digest& genesis_hash() const { return genesis_hash_; }
  const Digest& tip_hash() const { return main_.back(); }
  const BlockPtr& tip() const { return blocks_.at(main_.back()); }
  Height tip_height() const { return tip()->header.height; }

  Height confirmed_upto() const {
    if (mode_ == ForkChoiceMode::Finalized) return tip_height();
    return tip_height() > confirmation_depth_ ? tip_height() - confirmation_depth_ : 0;
  }

  std::uint32_t confirmation_depth() const { return confirmation_depth_; }
  bool has_orphans() const { return !orphans_.empty(); }
  std::vector<Digest> missing_parents() const {
    std::vector<Digest> out;
    out.reserve(orphans_.size());
    for (const auto& [parent, _] : orphans_) out.push_back(parent);
    return out;
  }

  // One JSON object per block, main branch flagged, for offline analysis.
  void dump_jsonl(std::ostream& os) const {
    for (const Digest& h : main_) write_block_line(os, h);
    // off-main blocks after the main branch, in deterministic digest order
    std::vector<Digest> rest;
    for (const auto& [h, _] : blocks_)
      if (!main_set_.count(h)) rest.push_back(h);
    std::sort(rest.begin(), rest.end());
    for (const Digest& h : rest) write_block_line(os, h);
  }

 private:
  void insert_connected(const Digest& h, BlockPtr b) {
    heads_.erase(b->header.parent_hash);
    heads_.insert(h);
    children_[b->header.parent_hash].push_back(h);
    blocks_.emplace(h, std::move(b));
    ++total_appended_;
    update_main(h);
  }

  void connect_orphans(const Digest& parent) {
    auto it = orphans_.find(parent);
    if (it == orphans_.end()) return;
    auto waiting = std::move(it->second);
    orphans_.erase(it);
    for (auto& b : waiting) {
      const Digest h = b->hash();
      if (blocks_.count(h)) continue;
      if (verify_cert_ && !verify_cert_(*b)) continue;
      insert_connected(h, std::move(b));
      connect_orphans(h);
    }
  }

  void update_main(const Digest& appended) {
    const BlockPtr& b = blocks_.at(appended);
    if (b->header.parent_hash == main_.back()) {
      main_.push_back(appended);
      main_set_.insert(appended);
      return;
    }
    // Appended off the tip: re-run fork choice only if this head can win.
    if (b->header.height < tip_height()) return;
    main_ = fork_choice(ForkChoiceMode::LongestChain);
    main_set_.clear();
    main_set_.insert(main_.begin(), main_.end());
  }

  Digest best_head() const {
    Digest best;
    Height best_height = 0;
    bool first = true;
    for (const Digest& h : heads_) {
      const Height height = blocks_.at(h)->header.height;
      if (first || height > best_height || (height == best_height && h < best)) {
        best = h;
        best_height = height;
        first = false;
      }
    }
    return best;
  }

  void check_finalized_safety() const {
    for (const auto& [parent, kids] : children_) {
      if (kids.size() > 1)
        throw SafetyViolation("conflicting certified blocks at height " +
                              std::to_string(blocks_.at(kids[0])->header.height));
    }
  }

  void write_block_line(std::ostream& os, const Digest& h) const {
    const BlockPtr& b = blocks_.at(h);
    nlohmann::json j;
    j["hash"] = h.hex();
    j["height"] = b->header.height;
    j["parent"] = b->header.parent_hash.hex();
    j["proposer"] = b->header.proposer;
    j["nonce"] = b->header.nonce;
    j["state_root"] = b->header.state_root.hex();
    j["txn_root"] = b->header.txn_root.hex();
    j["timestamp"] = b->header.timestamp;
    j["main"] = main_set_.count(h) != 0;
    nlohmann::json txns = nlohmann::json::array();
    for (const auto& t : b->txns) {
      txns.push_back({{"id", t->txn_id.hex()},
                      {"sender", t->sender},
                      {"contract", t->contract},
                      {"method", t->method},
                      {"submit_time", t->submit_time}});
    }
    j["txns"] = std::move(txns);
    os << j.dump() << '\n';
  }

  ForkChoiceMode mode_;
  std::uint32_t confirmation_depth_;
  CertVerifier verify_cert_;
  Digest genesis_hash_;

  std::unordered_map<Digest, BlockPtr, DigestHash> blocks_;
  std::unordered_map<Digest, std::vector<Digest>, DigestHash> children_;
  std::unordered_map<Digest, std::vector<BlockPtr>, DigestHash> orphans_;
  std::unordered_set<Digest, DigestHash> heads_;
  std::vector<Digest> main_;
  std::unordered_set<Digest, DigestHash> main_set_;
  std::uint64_t total_appended_ = 0;
};

}  // namespace blocksim
