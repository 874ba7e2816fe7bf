#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "blocksim/net/node.hpp"

namespace blocksim::bench {

enum class WorkloadKind : std::uint8_t { Ycsb, Smallbank, DoNothing, IoHeavy, CpuHeavy, Analytics };

inline const char* to_string(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::Ycsb: return "ycsb";
    case WorkloadKind::Smallbank: return "smallbank";
    case WorkloadKind::DoNothing: return "donothing";
    case WorkloadKind::IoHeavy: return "ioheavy";
    case WorkloadKind::CpuHeavy: return "cpuheavy";
    default: return "analytics";
  }
}

inline WorkloadKind workload_from_string(const std::string& s) {
  if (s == "ycsb") return WorkloadKind::Ycsb;
  if (s == "smallbank") return WorkloadKind::Smallbank;
  if (s == "donothing") return WorkloadKind::DoNothing;
  if (s == "ioheavy") return WorkloadKind::IoHeavy;
  if (s == "cpuheavy") return WorkloadKind::CpuHeavy;
  if (s == "analytics") return WorkloadKind::Analytics;
  throw ConfigError("unknown workload kind: " + s);
}

enum class KeyDistribution : std::uint8_t { Uniform, Zipfian };

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::Ycsb;
  std::uint32_t clients = 8;
  std::uint32_t threads_per_client = 1;
  std::uint64_t ops = 0;               // total budget, 0 = run to the horizon
  double read_ratio = 0.5;
  KeyDistribution key_distribution = KeyDistribution::Zipfian;
  double zipf_theta = 0.99;
  std::uint64_t records = 1000;        // preloaded kv records
  std::uint32_t value_size = 100;
  double request_rate = 0.0;           // per-client ops/s; 0 = closed loop
  bool saturating = false;             // open loop, as fast as the channel takes

  std::uint32_t accounts = 100;        // money-transfer population
  std::int64_t initial_balance = 1000;
  std::uint32_t insufficient_every = 0;  // every k-th transfer asks too much

  std::uint32_t ioheavy_batch = 50;
  std::uint32_t cpuheavy_n = 10'000;

  std::uint64_t analytics_blocks = 10'000;
  std::uint32_t analytics_txns_per_block = 3;
  std::uint32_t analytics_accounts = 1024;
  std::uint32_t analytics_queries = 100;

  std::string contract_id() const {
    switch (kind) {
      case WorkloadKind::Ycsb: return "kvstore";
      case WorkloadKind::Smallbank: return "smallbank";
      case WorkloadKind::DoNothing: return "donothing";
      case WorkloadKind::IoHeavy: return "ioheavy";
      case WorkloadKind::CpuHeavy: return "cpuheavy";
      default: return "versionkv";
    }
  }
};

// YCSB-style zipfian over [0, n), theta in (0, 1).
class ZipfianGenerator {
 public:
  ZipfianGenerator(std::uint64_t n, double theta) : n_(n), theta_(theta) {
    zetan_ = zeta(n, theta);
    const double zeta2 = zeta(2, theta);
    alpha_ = 1.0 / (1.0 - theta);
    eta_ = (1.0 - std::pow(2.0 / static_cast<double>(n), 1.0 - theta)) / (1.0 - zeta2 / zetan_);
  }

  std::uint64_t next(Rng& rng) {
    const double u = rng.unit();
    const double uz = u * zetan_;
    if (uz < 1.0) return 0;
    if (uz < 1.0 + std::pow(0.5, theta_)) return 1;
    const auto idx = static_cast<std::uint64_t>(static_cast<double>(n_) *
                                                std::pow(eta_ * u - eta_ + 1.0, alpha_));
    return idx >= n_ ? n_ - 1 : idx;
  }

 private:
  static double zeta(std::uint64_t n, double theta) {
    double sum = 0;
    for (std::uint64_t i = 1; i <= n; ++i) sum += 1.0 / std::pow(static_cast<double>(i), theta);
    return sum;
  }

  std::uint64_t n_;
  double theta_;
  double zetan_;
  double alpha_;
  double eta_;
};

inline std::string account_name(std::uint32_t i) { return "acct" + std::to_string(i); }

// Per-client op source. Deterministic given its seed.
class WorkloadGenerator {
 public:
  WorkloadGenerator(const WorkloadSpec& spec, std::uint32_t client_index, std::uint64_t seed)
      : spec_(spec), client_(client_index), rng_(derive_seed(seed, "client", client_index)),
        zipf_(spec.records == 0 ? 1 : spec.records, spec.zipf_theta) {}

  TxnPtr next(Tick now) {
    ++ops_;
    const std::string sender = "c" + std::to_string(client_);
    switch (spec_.kind) {
      case WorkloadKind::Ycsb: {
        const std::string key = "k" + std::to_string(pick_key());
        if (rng_.unit() < spec_.read_ratio) {
          return make(sender, "kvstore", "read", {Value(key)}, now);
        }
        return make(sender, "kvstore", "write", {Value(key), Value(random_bytes(spec_.value_size))},
                    now);
      }
      case WorkloadKind::Smallbank: {
        const std::uint32_t from = static_cast<std::uint32_t>(rng_.uniform(0, spec_.accounts - 1));
        std::uint32_t to = static_cast<std::uint32_t>(rng_.uniform(0, spec_.accounts - 2));
        if (to >= from) ++to;
        std::int64_t amount = static_cast<std::int64_t>(rng_.uniform(1, 50));
        if (spec_.insufficient_every != 0 && ops_ % spec_.insufficient_every == 0)
          amount = spec_.initial_balance * static_cast<std::int64_t>(spec_.accounts) + 1;
        return make(account_name(from), "smallbank", "send_payment",
                    {Value(account_name(from)), Value(account_name(to)), Value(amount)}, now);
      }
      case WorkloadKind::DoNothing:
        return make(sender, "donothing", "invoke", {}, now);
      case WorkloadKind::IoHeavy: {
        const bool read = rng_.unit() < spec_.read_ratio;
        return make(sender, "ioheavy", read ? "read_batch" : "write_batch",
                    {Value(static_cast<std::int64_t>(spec_.ioheavy_batch)),
                     Value(rng_.next_u64())},
                    now);
      }
      case WorkloadKind::CpuHeavy:
        return make(sender, "cpuheavy", "sort",
                    {Value(static_cast<std::int64_t>(spec_.cpuheavy_n))}, now);
      default:
        throw ConfigError("analytics workload is driven by the preload runner");
    }
  }

 private:
  std::uint64_t pick_key() {
    if (spec_.key_distribution == KeyDistribution::Uniform)
      return rng_.uniform(0, spec_.records - 1);
    return zipf_.next(rng_);
  }

  std::vector<std::uint8_t> random_bytes(std::uint32_t n) {
    std::vector<std::uint8_t> out;
    out.reserve(n);
    while (out.size() < n) {
      std::uint64_t v = rng_.next_u64();
      for (int i = 0; i < 8 && out.size() < n; ++i) {
        out.push_back(static_cast<std::uint8_t>(v));
        v >>= 8;
      }
    }
    return out;
  }

  TxnPtr make(std::string sender, std::string contract, std::string method,
              std::vector<Value> args, Tick now) {
    return std::make_shared<const Transaction>(
        Transaction::make(std::move(sender), std::move(contract), std::move(method),
                          std::move(args), now));
  }

  WorkloadSpec spec_;
  std::uint32_t client_;
  Rng rng_;
  ZipfianGenerator zipf_;
  std::uint64_t ops_ = 0;
};

// Simulated client: open-loop at a fixed rate, or closed-loop with a fixed
// number of in-flight requests (next submit only after confirmation).
// Every submission is broadcast to all servers.
class ClientActor {
 public:
  ClientActor(std::uint32_t index, const WorkloadSpec& spec, std::uint64_t seed,
              std::uint64_t op_budget)
      : index_(index), spec_(spec), gen_(spec, index, seed), budget_(op_budget),
        outstanding_limit_(spec.threads_per_client) {
    if (spec_.request_rate > 0)
      interval_num_ = 1000.0 / spec_.request_rate;  // ticks between submits
  }

  std::uint32_t index() const { return index_; }
  std::uint64_t submitted() const { return submitted_; }

  void on_tick(net::NetCtx& ctx, std::vector<TxnPtr>* submitted_out) {
    if (budget_ != 0 && submitted_ >= budget_) return;
    if (spec_.request_rate > 0) {
      credit_ += 1.0;
      while (credit_ >= interval_num_ && (budget_ == 0 || submitted_ < budget_)) {
        credit_ -= interval_num_;
        submit(ctx, submitted_out);
      }
    } else {
      while (outstanding_ < outstanding_limit_ && (budget_ == 0 || submitted_ < budget_)) {
        submit(ctx, submitted_out);
        ++outstanding_;
      }
    }
  }

  void notify_confirmed(std::uint32_t count) {
    outstanding_ = count >= outstanding_ ? 0 : outstanding_ - count;
  }

 private:
  void submit(net::NetCtx& ctx, std::vector<TxnPtr>* submitted_out) {
    TxnPtr txn = gen_.next(ctx.now());
    ++submitted_;
    if (submitted_out) submitted_out->push_back(txn);
    net::Message m;
    m.kind = net::MsgKind::Submit;
    m.txn = txn;
    ctx.broadcast(m, true);
  }

  std::uint32_t index_;
  WorkloadSpec spec_;
  WorkloadGenerator gen_;
  std::uint64_t budget_;
  std::uint32_t outstanding_limit_;
  std::uint32_t outstanding_ = 0;
  double interval_num_ = 0.0;
  double credit_ = 0.0;
  std::uint64_t submitted_ = 0;
};

// Deterministic pre-run state: deploy the workload contract and seed records
// or balances. Applied identically on every replica and on the observer.
inline net::StatePreload make_preload(const WorkloadSpec& spec, std::uint64_t seed) {
  return [spec, seed](ContractRuntime& runtime, StateStore&) {
    runtime.deploy(spec.contract_id());
    switch (spec.kind) {
      case WorkloadKind::Ycsb: {
        Rng rng(derive_seed(seed, "load", 0));
        for (std::uint64_t i = 0; i < spec.records; ++i) {
          std::vector<std::uint8_t> value;
          value.reserve(spec.value_size);
          while (value.size() < spec.value_size) {
            std::uint64_t v = rng.next_u64();
            for (int b = 0; b < 8 && value.size() < spec.value_size; ++b) {
              value.push_back(static_cast<std::uint8_t>(v));
              v >>= 8;
            }
          }
          auto txn = Transaction::make("loader", "kvstore", "write",
                                       {Value("k" + std::to_string(i)), Value(std::move(value))},
                                       0);
          runtime.invoke(txn, 0);
        }
        break;
      }
      case WorkloadKind::Smallbank: {
        for (std::uint32_t i = 0; i < spec.accounts; ++i) {
          auto txn = Transaction::make(
              "loader", "smallbank", "deposit",
              {Value(account_name(i)), Value(spec.initial_balance)}, 0);
          runtime.invoke(txn, 0);
        }
        break;
      }
      default:
        break;
    }
  };
}

}  // namespace blocksim::bench
