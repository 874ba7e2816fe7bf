#pragma once

#include <fstream>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "blocksim/bench/metrics.hpp"
#include "blocksim/bench/workload.hpp"

namespace blocksim::bench {

struct ObserverOptions {
  bool assert_invariants = false;
  bool replay_state = true;               // maintain the driver-side replica
  std::vector<std::string> conservation_accounts;  // smallbank balance keys
  std::int64_t conservation_total = 0;
  std::ofstream* receipts_out = nullptr;  // JSON-lines receipt log
};

struct InvariantFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The driver's global view: every minted or committed block lands here, fork
// accounting and confirmation latency are computed on this chain, and a
// replay replica executes the main branch for receipts and invariant checks.
class Observer {
 public:
  Observer(BlockPtr genesis, const ConsensusConfig& consensus, std::uint32_t num_buckets,
           net::StatePreload preload, ObserverOptions opts)
      : consensus_(consensus), opts_(std::move(opts)), num_buckets_(num_buckets),
        preload_(std::move(preload)),
        chain_(genesis, consensus.fork_mode(), consensus.confirmation_depth),
        store_(num_buckets), runtime_(store_) {
    register_builtin_contracts(runtime_);
    if (preload_) preload_(runtime_, store_);
    exec_branch_.push_back(genesis->hash());
  }

  // Track a closed-loop submission so its confirmation can wake the client.
  void track_closed_loop(const TxnPtr& txn, std::uint32_t client) {
    closed_loop_[txn->txn_id] = client;
  }

  void on_block(NodeId node, const BlockPtr& b, Tick now, bool committed) {
    (void)node;
    if (committed) {
      auto it = committed_heights_.find(b->header.height);
      if (it != committed_heights_.end()) {
        if (it->second != b->hash())
          throw SafetyViolation("conflicting committed blocks at height " +
                                std::to_string(b->header.height));
        return;  // later replicas committing the same block
      }
      committed_heights_.emplace(b->header.height, b->hash());
    }
    if (chain_.append(b) != AppendResult::Appended) return;
    note_main_growth(now);
    if (committed) {
      confirm_block(b, now);
    } else {
      confirm_by_depth(now);
    }
    if (opts_.replay_state) replay_main();
  }

  void sample_second(std::uint32_t second, const net::NetCounters& counters,
                     std::uint64_t view_changes) {
    SecondSample s;
    s.second = second;
    s.committed_txns = committed_txns_;
    const auto fd = chain_.fork_delta();
    s.total_blocks = fd.total_blocks;
    s.main_blocks = fd.main_blocks;
    s.delta = fd.delta;
    s.dropped = counters.dropped_total();
    s.view_changes = view_changes;
    series_.push_back(s);
  }

  // Confirmed transactions whose clients wait in closed loop; consumed by the
  // runner each tick.
  std::vector<std::uint32_t> take_confirm_wakeups() { return std::move(wakeups_); }

  std::uint64_t committed_txns() const { return committed_txns_; }
  const std::vector<Tick>& latencies() const { return latencies_; }
  const std::vector<SecondSample>& series() const { return series_; }
  const ChainView& chain() const { return chain_; }
  Tick last_block_tick() const { return last_main_growth_; }
  Tick max_block_gap() const { return max_gap_; }
  std::uint64_t receipts_committed() const { return receipts_committed_; }
  std::uint64_t receipts_reverted() const { return receipts_reverted_; }
  std::uint64_t receipts_aborted() const { return receipts_aborted_; }

  SecuritySnapshot security() const {
    const auto fd = chain_.fork_delta();
    return SecuritySnapshot{fd.total_blocks, fd.main_blocks, fd.delta, fd.ratio()};
  }

  // Replay root when the replica ran; otherwise rebuilt from the confirmed
  // prefix once at the end.
  Digest final_state_root() {
    if (opts_.replay_state) return store_.state_root();
    StateStore store(num_buckets_);
    ContractRuntime runtime(store);
    register_builtin_contracts(runtime);
    if (preload_) preload_(runtime, store);
    const auto& main = chain_.main_branch();
    const Height upto = chain_.confirmed_upto();
    for (size_t i = 1; i < main.size(); ++i) {
      const BlockPtr& b = chain_.block(main[i]);
      if (b->header.height > upto) break;
      runtime.execute_block(*b);
    }
    return store.state_root();
  }

  StateStore& replay_store() { return store_; }

  void finish(Tick end) {
    const Tick gap = end >= last_main_growth_ ? end - last_main_growth_ : 0;
    max_gap_ = std::max(max_gap_, gap);
  }

 private:
  void note_main_growth(Tick now) {
    const Tick gap = now >= last_main_growth_ ? now - last_main_growth_ : 0;
    max_gap_ = std::max(max_gap_, gap);
    last_main_growth_ = now;
  }

  // Longest-chain confirmation: a block counts once it has `depth` successors
  // on the observer's main branch.
  void confirm_by_depth(Tick now) {
    const auto& main = chain_.main_branch();
    const std::uint32_t depth = consensus_.confirmation_depth;
    if (main.size() <= depth + 1) return;
    for (size_t i = 1; i + depth < main.size(); ++i) {
      const Digest& h = main[i];
      if (confirmed_blocks_.count(h)) continue;
      confirmed_blocks_.insert(h);
      confirm_block(chain_.block(h), now);
    }
  }

  void confirm_block(const BlockPtr& b, Tick now) {
    for (const auto& t : b->txns) {
      if (!confirmed_txns_.insert(t->txn_id).second) continue;
      ++committed_txns_;
      latencies_.push_back(now >= t->submit_time ? now - t->submit_time : 0);
      auto it = closed_loop_.find(t->txn_id);
      if (it != closed_loop_.end()) {
        wakeups_.push_back(it->second);
        closed_loop_.erase(it);
      }
    }
  }

  void replay_main() {
    const auto& main = chain_.main_branch();
    const bool extension = main.size() >= exec_branch_.size() &&
                           main[exec_branch_.size() - 1] == exec_branch_.back();
    if (!extension) {
      store_ = StateStore(num_buckets_);
      runtime_.attach(store_);
      runtime_.reset_deployments();
      if (preload_) preload_(runtime_, store_);
      exec_branch_.assign(main.begin(), main.begin() + 1);
      receipts_committed_ = receipts_reverted_ = receipts_aborted_ = 0;
      for (size_t i = 1; i < main.size(); ++i) replay_block(chain_.block(main[i]));
      return;
    }
    for (size_t i = exec_branch_.size(); i < main.size(); ++i)
      replay_block(chain_.block(main[i]));
  }

  void replay_block(const BlockPtr& b) {
    for (const auto& txn : b->txns) {
      std::optional<Digest> root_before;
      if (opts_.assert_invariants) root_before = store_.state_root();
      Receipt r = runtime_.invoke(*txn, b->header.height);
      switch (r.status) {
        case ReceiptStatus::Committed: ++receipts_committed_; break;
        case ReceiptStatus::Reverted: ++receipts_reverted_; break;
        case ReceiptStatus::Aborted: ++receipts_aborted_; break;
      }
      if (opts_.assert_invariants && r.status != ReceiptStatus::Committed) {
        if (store_.state_root() != *root_before)
          throw InvariantFailure("state root changed by a non-committed transaction");
      }
      if (opts_.receipts_out) write_receipt(b->header.height, r);
    }
    runtime_.run_block_end_hooks(b->header.height);
    exec_branch_.push_back(b->hash());
    if (opts_.assert_invariants && !opts_.conservation_accounts.empty()) check_conservation();
  }

  void check_conservation() {
    std::int64_t total = 0;
    for (const auto& acct : opts_.conservation_accounts) {
      auto v = store_.get_latest(SmallbankContract::key(acct));
      if (!v) continue;
      ByteReader r(*v);
      total += r.i64();
    }
    if (total != opts_.conservation_total)
      throw InvariantFailure("balance conservation violated: " + std::to_string(total) +
                             " != " + std::to_string(opts_.conservation_total));
  }

  void write_receipt(Height height, const Receipt& r) {
    nlohmann::json j;
    j["block"] = height;
    j["txn_id"] = r.txn_id.hex();
    j["status"] = to_string(r.status);
    j["steps_used"] = r.steps_used;
    j["state_keys_written"] = r.state_keys_written;
    if (!r.error.empty()) j["error"] = r.error;
    (*opts_.receipts_out) << j.dump() << '\n';
  }

  ConsensusConfig consensus_;
  ObserverOptions opts_;
  std::uint32_t num_buckets_;
  net::StatePreload preload_;
  ChainView chain_;
  StateStore store_;
  ContractRuntime runtime_;
  std::vector<Digest> exec_branch_;

  std::unordered_map<Height, Digest> committed_heights_;
  std::unordered_set<Digest, DigestHash> confirmed_blocks_;
  std::unordered_set<Digest, DigestHash> confirmed_txns_;
  std::unordered_map<Digest, std::uint32_t, DigestHash> closed_loop_;
  std::vector<std::uint32_t> wakeups_;
  std::vector<Tick> latencies_;
  std::vector<SecondSample> series_;

  std::uint64_t committed_txns_ = 0;
  std::uint64_t receipts_committed_ = 0;
  std::uint64_t receipts_reverted_ = 0;
  std::uint64_t receipts_aborted_ = 0;
  Tick last_main_growth_ = 0;
  Tick max_gap_ = 0;
};

}  // namespace blocksim::bench
