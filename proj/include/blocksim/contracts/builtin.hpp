#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "blocksim/contracts/runtime.hpp"
#include "blocksim/rng.hpp"

namespace blocksim {

namespace detail {

inline std::int64_t arg_i64(const std::vector<Value>& args, size_t i) {
  if (i >= args.size() || !std::holds_alternative<std::int64_t>(args[i]))
    throw ContractError("expected int argument at position " + std::to_string(i));
  return std::get<std::int64_t>(args[i]);
}

inline std::uint64_t arg_u64(const std::vector<Value>& args, size_t i) {
  if (i >= args.size() || !std::holds_alternative<std::uint64_t>(args[i]))
    throw ContractError("expected uint argument at position " + std::to_string(i));
  return std::get<std::uint64_t>(args[i]);
}

inline const std::string& arg_str(const std::vector<Value>& args, size_t i) {
  if (i >= args.size() || !std::holds_alternative<std::string>(args[i]))
    throw ContractError("expected string argument at position " + std::to_string(i));
  return std::get<std::string>(args[i]);
}

inline std::vector<std::uint8_t> arg_bytes(const std::vector<Value>& args, size_t i) {
  if (i >= args.size()) throw ContractError("missing argument");
  if (std::holds_alternative<std::vector<std::uint8_t>>(args[i]))
    return std::get<std::vector<std::uint8_t>>(args[i]);
  if (std::holds_alternative<std::string>(args[i]))
    return to_bytes(std::get<std::string>(args[i]));
  throw ContractError("expected bytes argument");
}

inline std::vector<std::uint8_t> encode_i64(std::int64_t v) {
  ByteWriter w;
  w.i64(v);
  return w.take();
}

inline std::int64_t decode_i64(const std::vector<std::uint8_t>& b) {
  ByteReader r(b);
  return r.i64();
}

}  // namespace detail

// Consensus-layer baseline: accepts any transaction and returns.
class DoNothingContract final : public Contract {
 public:
  std::string_view id() const override { return "donothing"; }
  void invoke(std::string_view method, const std::vector<Value>&, ContractContext& ctx) override {
    if (method != "invoke") throw ContractError("unknown method: " + std::string(method));
    ctx.charge();
  }
};

// Plain key-value storage, the YCSB target.
class KvStoreContract final : public Contract {
 public:
  std::string_view id() const override { return "kvstore"; }

  void invoke(std::string_view method, const std::vector<Value>& args,
              ContractContext& ctx) override {
    if (method == "write") {
      ctx.put_state(key(detail::arg_str(args, 0)), detail::arg_bytes(args, 1));
    } else if (method == "read") {
      auto v = ctx.get_state(key(detail::arg_str(args, 0)));
      if (v) ctx.set_result(Value(std::move(*v)));
    } else {
      throw ContractError("unknown method: " + std::string(method));
    }
  }

  static std::string key(std::string_view user_key) { return "kv:" + std::string(user_key); }
};

// Two-key money transfers with balance checks.
class SmallbankContract final : public Contract {
 public:
  std::string_view id() const override { return "smallbank"; }

  void invoke(std::string_view method, const std::vector<Value>& args,
              ContractContext& ctx) override {
    if (method == "deposit") {
      const auto& acct = detail::arg_str(args, 0);
      const std::int64_t amount = detail::arg_i64(args, 1);
      if (amount < 0) throw ContractError("negative deposit");
      set_balance(ctx, acct, balance_of(ctx, acct) + amount);
    } else if (method == "send_payment") {
      const auto& from = detail::arg_str(args, 0);
      const auto& to = detail::arg_str(args, 1);
      const std::int64_t amount = detail::arg_i64(args, 2);
      if (amount < 0) throw ContractError("negative amount");
      const std::int64_t from_balance = balance_of(ctx, from);
      if (from_balance < amount) ctx.revert("insufficient funds");
      set_balance(ctx, from, from_balance - amount);
      set_balance(ctx, to, balance_of(ctx, to) + amount);
    } else if (method == "balance") {
      ctx.set_result(Value(balance_of(ctx, detail::arg_str(args, 0))));
    } else {
      throw ContractError("unknown method: " + std::string(method));
    }
  }

  static std::string key(std::string_view acct) { return "sb:" + std::string(acct); }

 private:
  static std::int64_t balance_of(ContractContext& ctx, std::string_view acct) {
    auto v = ctx.get_state(key(acct));
    return v ? detail::decode_i64(*v) : 0;
  }

  static void set_balance(ContractContext& ctx, std::string_view acct, std::int64_t balance) {
    ctx.put_state(key(acct), detail::encode_i64(balance));
  }
};

// Random reads and writes against local state: 20-byte keys, 100-byte values.
class IoHeavyContract final : public Contract {
 public:
  std::string_view id() const override { return "ioheavy"; }

  void invoke(std::string_view method, const std::vector<Value>& args,
              ContractContext& ctx) override {
    const std::int64_t n = detail::arg_i64(args, 0);
    const std::uint64_t seed = detail::arg_u64(args, 1);
    if (n < 0) throw ContractError("negative batch size");
    SplitMix64 sm{seed};
    std::int64_t count = 0;
    if (method == "write_batch") {
      for (std::int64_t i = 0; i < n; ++i) {
        ctx.put_state(make_key(sm), make_value(sm));
        ++count;
      }
    } else if (method == "read_batch") {
      for (std::int64_t i = 0; i < n; ++i) {
        auto v = ctx.get_state(make_key(sm));
        make_value(sm);  // keep the stream aligned with write_batch
        if (v) ++count;
      }
    } else {
      throw ContractError("unknown method: " + std::string(method));
    }
    ctx.set_result(Value(count));
  }

  static std::string make_key(SplitMix64& sm) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string key = "io";
    key.reserve(20);
    for (int i = 0; i < 3; ++i) {
      std::uint64_t v = sm.next();
      for (int j = 0; j < 6 && key.size() < 20; ++j) {
        key.push_back(kDigits[v & 0xf]);
        v >>= 4;
      }
    }
    return key;
  }

  static std::vector<std::uint8_t> make_value(SplitMix64& sm) {
    std::vector<std::uint8_t> value;
    value.reserve(100);
    while (value.size() < 100) {
      std::uint64_t v = sm.next();
      for (int j = 0; j < 8 && value.size() < 100; ++j) {
        value.push_back(static_cast<std::uint8_t>(v));
        v >>= 8;
      }
    }
    return value;
  }
};

// In-contract quicksort over a descending array; one step per comparison.
class CpuHeavyContract final : public Contract {
 public:
  std::string_view id() const override { return "cpuheavy"; }

  void invoke(std::string_view method, const std::vector<Value>& args,
              ContractContext& ctx) override {
    if (method != "sort") throw ContractError("unknown method: " + std::string(method));
    const std::int64_t n = detail::arg_i64(args, 0);
    if (n < 1) throw ContractError("sort size must be positive");
    std::vector<std::int64_t> data;
    data.reserve(static_cast<size_t>(n));
    for (std::int64_t v = n; v >= 1; --v) data.push_back(v);
    quicksort(data, 0, static_cast<std::int64_t>(data.size()) - 1, ctx);
    ctx.set_result(Value(static_cast<std::int64_t>(checksum(data))));
  }

  static std::uint64_t checksum(const std::vector<std::int64_t>& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::int64_t v : data) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 1099511628211ULL;
    }
    return h;
  }

 private:
  // Hoare partition with middle pivot; a reversed input stays O(n log n).
  static void quicksort(std::vector<std::int64_t>& a, std::int64_t lo, std::int64_t hi,
                        ContractContext& ctx) {
    while (lo < hi) {
      const std::int64_t pivot = a[static_cast<size_t>(lo + (hi - lo) / 2)];
      std::int64_t i = lo - 1;
      std::int64_t j = hi + 1;
      while (true) {
        do {
          ++i;
          ctx.charge();
        } while (a[static_cast<size_t>(i)] < pivot);
        do {
          --j;
          ctx.charge();
        } while (a[static_cast<size_t>(j)] > pivot);
        if (i >= j) break;
        std::swap(a[static_cast<size_t>(i)], a[static_cast<size_t>(j)]);
      }
      // recurse on the smaller side to bound stack depth
      if (j - lo < hi - (j + 1)) {
        quicksort(a, lo, j, ctx);
        lo = j + 1;
      } else {
        quicksort(a, j + 1, hi, ctx);
        hi = j;
      }
    }
  }
};

// Versioned transfer ledger behind the analytics queries: send_value stages
// transfers on a pending list; the commit hook records the block's transfer
// list and writes one account version per transfer, carrying the balance and
// the transfer amount. Q1 scans block records, Q2 walks account versions.
class VersionKvContract final : public Contract {
 public:
  std::string_view id() const override { return "versionkv"; }

  void invoke(std::string_view method, const std::vector<Value>& args,
              ContractContext& ctx) override {
    if (method == "send_value") {
      const auto& from = detail::arg_str(args, 0);
      const auto& to = detail::arg_str(args, 1);
      const std::int64_t value = detail::arg_i64(args, 2);
      auto pending = ctx.get_state(kPendingKey);
      auto list = pending ? StateStore::decode_txn_summaries(*pending)
                          : std::vector<StateStore::TxnSummary>{};
      list.push_back({from, to, value});
      ctx.put_state(kPendingKey, StateStore::encode_txn_summaries(list));
    } else if (method == "q1") {
      ctx.set_result(Value(q1(ctx, detail::arg_i64(args, 0), detail::arg_i64(args, 1))));
    } else if (method == "q2") {
      const auto& acct = detail::arg_str(args, 0);
      ctx.set_result(
          Value(q2(ctx, acct, detail::arg_i64(args, 1), detail::arg_i64(args, 2))));
    } else {
      throw ContractError("unknown method: " + std::string(method));
    }
  }

  // Pending transfers settle when the block commits; the list is cleared so
  // the next block starts empty.
  void on_block_end(BlockCommitContext& ctx) override {
    auto pending = ctx.get_state(kPendingKey);
    if (!pending) return;
    auto list = StateStore::decode_txn_summaries(*pending);
    if (list.empty()) return;
    ctx.put_state(block_key(ctx.block_height()), StateStore::encode_txn_summaries(list));
    for (const auto& t : list) {
      apply_transfer(ctx, t.from, -t.value, t.value);
      apply_transfer(ctx, t.to, t.value, t.value);
    }
    ctx.put_state(kPendingKey, StateStore::encode_txn_summaries({}));
  }

  static std::string account_key(std::string_view acct) { return "acct:" + std::string(acct); }
  static std::string block_key(Height h) { return "block:" + std::to_string(h); }

  struct AccountCell {
    std::int64_t balance = 0;
    std::int64_t txn_value = 0;

    std::vector<std::uint8_t> encode() const {
      ByteWriter w;
      w.i64(balance);
      w.i64(txn_value);
      return w.take();
    }

    static AccountCell decode(const std::vector<std::uint8_t>& b) {
      ByteReader r(b);
      AccountCell c;
      c.balance = r.i64();
      c.txn_value = r.i64();
      return c;
    }
  };

  static constexpr std::string_view kPendingKey = "pending_list";

 private:
  // Total value transferred in blocks [i, j).
  std::int64_t q1(ContractContext& ctx, std::int64_t i, std::int64_t j) {
    std::int64_t total = 0;
    for (std::int64_t h = i; h < j; ++h) {
      auto cell = ctx.get_state(block_key(static_cast<Height>(h)));
      if (!cell) continue;
      for (const auto& t : StateStore::decode_txn_summaries(*cell)) total += t.value;
    }
    return total;
  }

  // Largest transfer touching the account in blocks [i, j): the store walks
  // account versions newest-first and stops once past the range start.
  std::int64_t q2(ContractContext& ctx, const std::string& acct, std::int64_t i,
                  std::int64_t j) {
    if (j <= i) return 0;
    const Height start = i < 0 ? 0 : static_cast<Height>(i);
    const Height end = static_cast<Height>(j);
    std::int64_t best = 0;
    for (const auto& [bytes, _] : ctx.query_account_block_range(account_key(acct), start, end))
      best = std::max(best, AccountCell::decode(bytes).txn_value);
    return best;
  }

  static void apply_transfer(BlockCommitContext& ctx, const std::string& acct,
                             std::int64_t delta, std::int64_t value) {
    const std::string key = account_key(acct);
    AccountCell cell;
    if (auto prev = ctx.get_state(key)) cell = AccountCell::decode(*prev);
    cell.balance += delta;
    cell.txn_value = value;
    ctx.put_state(key, cell.encode());
  }
};

// Pyramid scheme: entrants accumulate the balance; once it exceeds twice the
// next payee's stake, that payee is paid out double and the cursor advances.
class DoublerContract final : public Contract {
 public:
  std::string_view id() const override { return "doubler"; }

  void invoke(std::string_view method, const std::vector<Value>& args,
              ContractContext& ctx) override {
    if (method != "enter") throw ContractError("unknown method: " + std::string(method));
    const std::int64_t amount = detail::arg_i64(args, 0);
    if (amount <= 0) throw ContractError("entry amount must be positive");

    auto participants = load_participants(ctx);
    participants.push_back({ctx.sender(), amount});
    std::int64_t balance = load_i64(ctx, "doubler:balance");
    std::int64_t payout_idx = load_i64(ctx, "doubler:payout_idx");
    balance += amount;

    while (payout_idx < static_cast<std::int64_t>(participants.size()) &&
           balance > 2 * participants[static_cast<size_t>(payout_idx)].amount) {
      const auto& payee = participants[static_cast<size_t>(payout_idx)];
      const std::int64_t payout = 2 * payee.amount;
      balance -= payout;
      const std::string paid_key = "doubler:paid:" + payee.addr;
      std::int64_t paid = 0;
      if (auto prev = ctx.get_state(paid_key)) paid = detail::decode_i64(*prev);
      ctx.put_state(paid_key, detail::encode_i64(paid + payout));
      ++payout_idx;
    }

    store_participants(ctx, participants);
    ctx.put_state("doubler:balance", detail::encode_i64(balance));
    ctx.put_state("doubler:payout_idx", detail::encode_i64(payout_idx));
  }

  struct Participant {
    std::string addr;
    std::int64_t amount = 0;
  };

 private:
  static std::int64_t load_i64(ContractContext& ctx, std::string_view key) {
    auto v = ctx.get_state(key);
    return v ? detail::decode_i64(*v) : 0;
  }

  static std::vector<Participant> load_participants(ContractContext& ctx) {
    auto v = ctx.get_state("doubler:participants");
    std::vector<Participant> out;
    if (!v) return out;
    ByteReader r(*v);
    const auto n = r.u32();
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      Participant p;
      p.addr = r.str();
      p.amount = r.i64();
      out.push_back(std::move(p));
    }
    return out;
  }

  static void store_participants(ContractContext& ctx, const std::vector<Participant>& list) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(list.size()));
    for (const auto& p : list) {
      w.str(p.addr);
      w.i64(p.amount);
    }
    ctx.put_state("doubler:participants", w.take());
  }
};

inline void register_builtin_contracts(ContractRuntime& runtime) {
  runtime.register_builtin(std::make_shared<DoNothingContract>());
  runtime.register_builtin(std::make_shared<KvStoreContract>());
  runtime.register_builtin(std::make_shared<SmallbankContract>());
  runtime.register_builtin(std::make_shared<IoHeavyContract>());
  runtime.register_builtin(std::make_shared<CpuHeavyContract>());
  runtime.register_builtin(std::make_shared<VersionKvContract>());
  runtime.register_builtin(std::make_shared<DoublerContract>());
}

}  // namespace blocksim
