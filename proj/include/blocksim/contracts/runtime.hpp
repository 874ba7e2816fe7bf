#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blocksim/block.hpp"
#include "blocksim/state_store.hpp"

namespace blocksim {

enum class ReceiptStatus : std::uint8_t { Committed, Aborted, Reverted };

inline const char* to_string(ReceiptStatus s) {
  switch (s) {
    case ReceiptStatus::Committed: return "committed";
    case ReceiptStatus::Aborted: return "aborted";
    default: return "reverted";
  }
}

struct Receipt {
  Digest txn_id;
  ReceiptStatus status = ReceiptStatus::Committed;
  std::uint64_t steps_used = 0;
  std::vector<std::string> state_keys_written;  // empty unless committed
  std::optional<Value> result;
  std::string error;
};

// Contract-raised rollback (e.g. insufficient funds). Distinct from runtime
// aborts: both leave state untouched, receipts record which happened.
struct RevertError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StepBudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-invocation execution context. All state access goes through here; each
// get/put/charge costs one step, and writes are staged so an abort discards
// them atomically.
class ContractContext {
 public:
  ContractContext(const StateStore& store, std::string sender, std::int64_t value,
                  Height block_height, std::uint64_t step_budget)
      : store_(store), sender_(std::move(sender)), value_(value),
        block_height_(block_height), step_budget_(step_budget) {}

  const std::string& sender() const { return sender_; }
  std::int64_t value() const { return value_; }
  Height block_height() const { return block_height_; }
  std::uint64_t steps_used() const { return steps_used_; }

  void charge(std::uint64_t steps = 1) {
    steps_used_ += steps;
    if (steps_used_ > step_budget_) throw StepBudgetError("step budget exceeded");
  }

  std::optional<std::vector<std::uint8_t>> get_state(std::string_view key) {
    charge();
    auto it = writes_.find(std::string(key));
    if (it != writes_.end()) return it->second;
    return store_.get_latest(key);
  }

  void put_state(std::string_view key, std::vector<std::uint8_t> value) {
    charge();
    writes_[std::string(key)] = std::move(value);
  }

  void put_state(std::string_view key, std::string_view value) {
    put_state(key, to_bytes(value));
  }

  // Historical version walk, newest first; one step per version visited.
  std::vector<std::pair<std::vector<std::uint8_t>, Height>> query_account_block_range(
      std::string_view key, Height start_block, Height end_block) {
    charge();
    if (!store_.has_key(key)) return {};
    auto out = store_.query_account_block_range(key, start_block, end_block);
    charge(out.size());
    return out;
  }

  [[noreturn]] void revert(const std::string& reason) { throw RevertError(reason); }

  void set_result(Value v) { result_ = std::move(v); }

  const std::map<std::string, std::vector<std::uint8_t>>& writes() const { return writes_; }
  std::optional<Value> take_result() { return std::move(result_); }

 private:
  const StateStore& store_;
  std::string sender_;
  std::int64_t value_;
  Height block_height_;
  std::uint64_t step_budget_;
  std::uint64_t steps_used_ = 0;
  std::map<std::string, std::vector<std::uint8_t>> writes_;
  std::optional<Value> result_;
};

// Commit-time bookkeeping context. Runs after every transaction in a block
// has settled; writes land directly (a put per call, so per-event version
// history is preserved) and cannot fail.
class BlockCommitContext {
 public:
  BlockCommitContext(StateStore& store, Height height) : store_(store), height_(height) {}

  Height block_height() const { return height_; }

  std::optional<std::vector<std::uint8_t>> get_state(std::string_view key) const {
    return store_.get_latest(key);
  }

  void put_state(std::string_view key, std::span<const std::uint8_t> value) {
    store_.put(key, value, height_);
  }

  void put_state(std::string_view key, const std::vector<std::uint8_t>& value) {
    store_.put(key, std::span<const std::uint8_t>(value.data(), value.size()), height_);
  }

 private:
  StateStore& store_;
  Height height_;
};

class Contract {
 public:
  virtual ~Contract() = default;
  virtual std::string_view id() const = 0;
  virtual void invoke(std::string_view method, const std::vector<Value>& args,
                      ContractContext& ctx) = 0;
  virtual void on_block_end(BlockCommitContext&) {}
};

struct BlockExecResult {
  std::vector<Receipt> receipts;
  std::uint64_t total_steps = 0;
  Digest post_state_root;
};

// Stored-procedure execution layer. Contracts are native plug-ins behind the
// deterministic context interface; deployment is itself a transaction
// (contract "sys", method "deploy") so activation is ordered by consensus.
class ContractRuntime {
 public:
  explicit ContractRuntime(StateStore& store, std::uint64_t step_budget = 100'000'000)
      : store_(&store), step_budget_(step_budget) {}

  void attach(StateStore& store) { store_ = &store; }

  // State rebuilds start from a clean slate; deployments replay with the chain.
  void reset_deployments() { deployed_.clear(); }

  void register_builtin(std::shared_ptr<Contract> contract) {
    available_[std::string(contract->id())] = std::move(contract);
  }

  bool deploy(std::string_view contract_id) {
    auto it = available_.find(std::string(contract_id));
    if (it == available_.end()) return false;
    deployed_[it->first] = it->second;
    return true;
  }

  bool is_deployed(std::string_view contract_id) const {
    return deployed_.count(std::string(contract_id)) != 0;
  }

  std::vector<std::string> deployed_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : deployed_) out.push_back(id);
    return out;
  }

  Receipt invoke(const Transaction& txn, Height block_height) {
    Receipt receipt;
    receipt.txn_id = txn.txn_id;
    if (txn.contract == "sys") {
      return invoke_sys(txn, receipt);
    }
    auto it = deployed_.find(txn.contract);
    if (it == deployed_.end()) {
      receipt.status = ReceiptStatus::Aborted;
      receipt.error = "unknown contract: " + txn.contract;
      return receipt;
    }
    std::int64_t value = 0;
    if (!txn.args.empty() && std::holds_alternative<std::int64_t>(txn.args[0]))
      value = std::get<std::int64_t>(txn.args[0]);
    ContractContext ctx(*store_, txn.sender, value, block_height, step_budget_);
    try {
      it->second->invoke(txn.method, txn.args, ctx);
      for (const auto& [key, val] : ctx.writes()) {
        store_->put(key, std::span<const std::uint8_t>(val.data(), val.size()), block_height);
        receipt.state_keys_written.push_back(key);
      }
      receipt.status = ReceiptStatus::Committed;
    } catch (const RevertError& e) {
      receipt.status = ReceiptStatus::Reverted;
      receipt.error = e.what();
    } catch (const StepBudgetError& e) {
      receipt.status = ReceiptStatus::Aborted;
      receipt.error = e.what();
    } catch (const ContractError& e) {
      receipt.status = ReceiptStatus::Aborted;
      receipt.error = e.what();
    }
    receipt.steps_used = ctx.steps_used();
    receipt.result = ctx.take_result();
    return receipt;
  }

  // Executes a committed block: every transaction in order, then each
  // deployed contract's commit hook. Determinism invariant: identical chain
  // prefix implies byte-identical post roots on every replica.
  BlockExecResult execute_block(const Block& block) {
    BlockExecResult result;
    result.receipts.reserve(block.txns.size());
    for (const auto& txn : block.txns) {
      Receipt r = invoke(*txn, block.header.height);
      result.total_steps += r.steps_used;
      result.receipts.push_back(std::move(r));
    }
    run_block_end_hooks(block.header.height);
    result.post_state_root = store_->state_root();
    return result;
  }

  void run_block_end_hooks(Height height) {
    BlockCommitContext commit_ctx(*store_, height);
    for (const auto& [id, contract] : deployed_) contract->on_block_end(commit_ctx);
  }

  std::uint64_t step_budget() const { return step_budget_; }

 private:
  Receipt invoke_sys(const Transaction& txn, Receipt receipt) {
    if (txn.method != "deploy" || txn.args.size() != 1 ||
        !std::holds_alternative<std::string>(txn.args[0])) {
      receipt.status = ReceiptStatus::Aborted;
      receipt.error = "unknown method: sys." + txn.method;
      return receipt;
    }
    const auto& target = std::get<std::string>(txn.args[0]);
    if (!deploy(target)) {
      receipt.status = ReceiptStatus::Aborted;
      receipt.error = "unknown contract: " + target;
      return receipt;
    }
    receipt.steps_used = 1;
    return receipt;
  }

  StateStore* store_;
  std::uint64_t step_budget_;
  std::map<std::string, std::shared_ptr<Contract>> available_;
  std::map<std::string, std::shared_ptr<Contract>> deployed_;
};

}  // namespace blocksim
