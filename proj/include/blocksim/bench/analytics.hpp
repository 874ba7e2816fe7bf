#pragma once

#include <memory>

#include "blocksim/bench/workload.hpp"

namespace blocksim::bench {

// The analytics workload runs against a deterministically preloaded chain:
// value transfers between a fixed account population, a few per block,
// executed through the versioned store. Built directly (one logical node) —
// the queries exercise the data model, not the transport.
struct AnalyticsData {
  std::vector<BlockPtr> blocks;  // [0] is genesis
  std::unique_ptr<StateStore> store;
  std::unique_ptr<ContractRuntime> runtime;
};

inline std::string analytics_account(std::uint32_t i) { return "a" + std::to_string(i); }

inline AnalyticsData build_analytics_chain(const WorkloadSpec& spec, std::uint64_t seed,
                                           std::uint32_t num_buckets) {
  AnalyticsData data;
  data.store = std::make_unique<StateStore>(num_buckets);
  data.runtime = std::make_unique<ContractRuntime>(*data.store);
  register_builtin_contracts(*data.runtime);
  data.runtime->deploy("versionkv");

  Block genesis;
  genesis.header.state_root = data.store->state_root();
  data.blocks.push_back(std::make_shared<const Block>(std::move(genesis)));

  Rng rng(derive_seed(seed, "analytics", 0));
  const std::uint32_t accounts = std::max(2u, spec.analytics_accounts);
  for (Height h = 1; h <= spec.analytics_blocks; ++h) {
    Block b;
    b.header.height = h;
    b.header.parent_hash = data.blocks.back()->hash();
    b.header.proposer = "n0";
    b.header.state_root = data.store->state_root();
    b.header.timestamp = h;
    for (std::uint32_t i = 0; i < spec.analytics_txns_per_block; ++i) {
      const std::uint32_t from = static_cast<std::uint32_t>(rng.uniform(0, accounts - 1));
      std::uint32_t to = static_cast<std::uint32_t>(rng.uniform(0, accounts - 2));
      if (to >= from) ++to;
      const std::int64_t value = static_cast<std::int64_t>(rng.uniform(1, 1000));
      b.txns.push_back(std::make_shared<const Transaction>(Transaction::make(
          analytics_account(from), "versionkv", "send_value",
          {Value(analytics_account(from)), Value(analytics_account(to)), Value(value)}, h)));
    }
    b.header.txn_root = txn_merkle_root(b.txns);
    auto block = std::make_shared<const Block>(std::move(b));
    data.runtime->execute_block(*block);
    data.blocks.push_back(std::move(block));
  }
  return data;
}

inline std::int64_t invoke_query_i64(ContractRuntime& runtime, const std::string& method,
                                     std::vector<Value> args) {
  auto txn = Transaction::make("driver", "versionkv", method, std::move(args), 0);
  Receipt r = runtime.invoke(txn, 0);
  if (r.status != ReceiptStatus::Committed || !r.result ||
      !std::holds_alternative<std::int64_t>(*r.result))
    throw std::runtime_error("analytics query failed: " + r.error);
  return std::get<std::int64_t>(*r.result);
}

// Total transferred value over blocks [i, j).
inline std::int64_t analytics_q1(ContractRuntime& runtime, std::int64_t i, std::int64_t j) {
  return invoke_query_i64(runtime, "q1", {Value(i), Value(j)});
}

// Largest transfer touching `acct` over blocks [i, j).
inline std::int64_t analytics_q2(ContractRuntime& runtime, const std::string& acct,
                                 std::int64_t i, std::int64_t j) {
  return invoke_query_i64(runtime, "q2", {Value(acct), Value(i), Value(j)});
}

}  // namespace blocksim::bench
