#pragma once

#include <algorithm>
#include <fstream>
#include <set>
#include <string>

#include "blocksim/bench/workload.hpp"

#include "json.hpp"

namespace blocksim {

struct OutputOptions {
  std::string dir;             // empty = no files
  bool chain_dump = true;
  bool receipts = false;
  bool state_snapshot = false;
  bool trace_file = false;
};

struct ExperimentConfig {
  std::string label = "run";
  std::uint32_t nodes = 4;
  std::uint32_t clients = 1;
  ConsensusConfig consensus;
  bench::WorkloadSpec workload;
  net::NetConfig net;
  net::FaultSchedule faults;
  net::ExecModel exec;
  std::vector<std::pair<NodeId, net::ByzantineBehavior>> byzantine;
  std::uint32_t num_buckets = 1024;
  Tick duration = seconds(60);
  std::uint64_t seed = 1;
  Tick stall_horizon = seconds(30);
  bool assert_invariants = false;  // CLI --assert
  OutputOptions output;
};

namespace detail {

// Strict section reader: typed lookups, unknown keys rejected by name.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: section '" + path_ + "' must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config: bad value for '" + path_ + "." + key + "'");
    }
  }

  template <typename T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError("config: missing required '" + path_ + "." + key + "'");
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config: bad value for '" + path_ + "." + key + "'");
    }
  }

  const nlohmann::json* sub(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key()))
        throw ConfigError("config: unknown key '" + path_ + "." + it.key() + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline net::ByzantineBehavior byzantine_from_string(const std::string& s) {
  if (s == "equivocate") return net::ByzantineBehavior::EquivocateLeader;
  if (s == "withhold") return net::ByzantineBehavior::WithholdVotes;
  throw ConfigError("unknown byzantine behavior: " + s);
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::Section;
  ExperimentConfig cfg;
  Section root(j, "");

  if (const auto* r = root.sub("run")) {
    Section s(*r, "run");
    cfg.label = s.get<std::string>("label", cfg.label);
    cfg.duration = seconds(s.get<std::uint64_t>("duration_s", 60));
    cfg.seed = s.get<std::uint64_t>("seed", cfg.seed);
    cfg.stall_horizon = seconds(s.get<std::uint64_t>("stall_horizon_s", 30));
    s.finish();
  }

  if (const auto* t = root.sub("topology")) {
    Section s(*t, "topology");
    cfg.nodes = s.get<std::uint32_t>("nodes", cfg.nodes);
    cfg.clients = s.get<std::uint32_t>("clients", cfg.clients);
    if (s.has("authorities"))
      cfg.consensus.authorities = s.require<std::vector<NodeId>>("authorities");
    s.finish();
  }

  if (const auto* c = root.sub("consensus")) {
    Section s(*c, "consensus");
    cfg.consensus.engine = engine_from_string(s.get<std::string>("engine", "pbft"));
    if (s.has("difficulty_hex"))
      cfg.consensus.difficulty_t = u256_from_hex(s.require<std::string>("difficulty_hex"));
    cfg.consensus.block_interval = s.get<Tick>("block_interval_ms", cfg.consensus.block_interval);
    cfg.consensus.batch_size = s.get<std::uint32_t>("batch_size", cfg.consensus.batch_size);
    cfg.consensus.batch_timeout = s.get<Tick>("batch_timeout_ms", cfg.consensus.batch_timeout);
    cfg.consensus.step_duration = s.get<Tick>("step_duration_ms", cfg.consensus.step_duration);
    cfg.consensus.view_change_timeout =
        s.get<Tick>("view_change_timeout_ms", cfg.consensus.view_change_timeout);
    cfg.consensus.checkpoint_interval =
        s.get<std::uint32_t>("checkpoint_interval", cfg.consensus.checkpoint_interval);
    cfg.consensus.confirmation_depth =
        s.get<std::uint32_t>("confirmation_depth", cfg.consensus.confirmation_depth);
    cfg.consensus.buffer_future_view =
        s.get<bool>("buffer_future_view", cfg.consensus.buffer_future_view);
    const std::string sf = s.get<std::string>("stake_function", "nxt");
    if (sf == "nxt")
      cfg.consensus.stake_function = StakeFunction::Nxt;
    else if (sf == "balance")
      cfg.consensus.stake_function = StakeFunction::Balance;
    else
      throw ConfigError("config: unknown consensus.stake_function '" + sf + "'");
    if (const auto* st = s.sub("stake")) {
      if (!st->is_object()) throw ConfigError("config: consensus.stake must be an object");
      for (auto it = st->begin(); it != st->end(); ++it)
        cfg.consensus.stake.entries[it.key()] = {it.value().get<std::uint64_t>(), 0};
    }
    s.finish();
  }

  if (const auto* st = root.sub("state")) {
    Section s(*st, "state");
    cfg.num_buckets = s.get<std::uint32_t>("num_buckets", cfg.num_buckets);
    s.finish();
  }

  if (const auto* e = root.sub("execution")) {
    Section s(*e, "execution");
    cfg.exec.steps_per_tick = s.get<std::uint64_t>("steps_per_tick", cfg.exec.steps_per_tick);
    cfg.exec.step_budget = s.get<std::uint64_t>("step_budget", cfg.exec.step_budget);
    s.finish();
  }

  if (const auto* w = root.sub("workload")) {
    Section s(*w, "workload");
    cfg.workload.kind = bench::workload_from_string(s.get<std::string>("kind", "ycsb"));
    cfg.workload.threads_per_client =
        s.get<std::uint32_t>("threads_per_client", cfg.workload.threads_per_client);
    cfg.workload.ops = s.get<std::uint64_t>("ops", cfg.workload.ops);
    cfg.workload.read_ratio = s.get<double>("read_ratio", cfg.workload.read_ratio);
    const std::string dist = s.get<std::string>("key_distribution", "zipfian");
    if (dist == "uniform")
      cfg.workload.key_distribution = bench::KeyDistribution::Uniform;
    else if (dist == "zipfian")
      cfg.workload.key_distribution = bench::KeyDistribution::Zipfian;
    else
      throw ConfigError("config: unknown workload.key_distribution '" + dist + "'");
    cfg.workload.zipf_theta = s.get<double>("zipf_theta", cfg.workload.zipf_theta);
    cfg.workload.records = s.get<std::uint64_t>("records", cfg.workload.records);
    cfg.workload.value_size = s.get<std::uint32_t>("value_size", cfg.workload.value_size);
    if (s.has("request_rate")) {
      const auto& rr = *s.sub("request_rate");
      if (rr.is_string() && rr.get<std::string>() == "saturating") {
        cfg.workload.saturating = true;
      } else if (rr.is_number()) {
        cfg.workload.request_rate = rr.get<double>();
      } else {
        throw ConfigError("config: workload.request_rate must be a number or \"saturating\"");
      }
    }
    cfg.workload.accounts = s.get<std::uint32_t>("accounts", cfg.workload.accounts);
    cfg.workload.initial_balance =
        s.get<std::int64_t>("initial_balance", cfg.workload.initial_balance);
    cfg.workload.insufficient_every =
        s.get<std::uint32_t>("insufficient_every", cfg.workload.insufficient_every);
    cfg.workload.ioheavy_batch = s.get<std::uint32_t>("ioheavy_batch", cfg.workload.ioheavy_batch);
    cfg.workload.cpuheavy_n = s.get<std::uint32_t>("cpuheavy_n", cfg.workload.cpuheavy_n);
    cfg.workload.analytics_blocks =
        s.get<std::uint64_t>("analytics_blocks", cfg.workload.analytics_blocks);
    cfg.workload.analytics_txns_per_block =
        s.get<std::uint32_t>("analytics_txns_per_block", cfg.workload.analytics_txns_per_block);
    cfg.workload.analytics_accounts =
        s.get<std::uint32_t>("analytics_accounts", cfg.workload.analytics_accounts);
    cfg.workload.analytics_queries =
        s.get<std::uint32_t>("analytics_queries", cfg.workload.analytics_queries);
    s.finish();
  }
  cfg.workload.clients = cfg.clients;

  if (const auto* n = root.sub("network")) {
    Section s(*n, "network");
    cfg.net.queue_capacity = s.get<std::uint32_t>("queue_capacity", cfg.net.queue_capacity);
    const std::string ch = s.get<std::string>("channel", "shared");
    if (ch == "shared")
      cfg.net.channel = net::ChannelMode::Shared;
    else if (ch == "segregated")
      cfg.net.channel = net::ChannelMode::Segregated;
    else
      throw ConfigError("config: unknown network.channel '" + ch + "'");
    cfg.net.service_rate = s.get<std::uint32_t>("service_rate", cfg.net.service_rate);
    cfg.net.delay_min = s.get<Tick>("delay_min_ms", cfg.net.delay_min);
    cfg.net.delay_max = s.get<Tick>("delay_max_ms", cfg.net.delay_max);
    cfg.net.corruption_rate = s.get<double>("corruption_rate", cfg.net.corruption_rate);
    s.finish();
  }

  if (const auto* f = root.sub("faults")) {
    Section s(*f, "faults");
    if (const auto* crashes = s.sub("crashes")) {
      for (const auto& c : *crashes) {
        Section cs(c, "faults.crashes[]");
        net::CrashEvent ev;
        ev.node = cs.require<NodeId>("node");
        ev.at = seconds(cs.require<std::uint64_t>("time_s"));
        cs.finish();
        cfg.faults.crashes.push_back(ev);
      }
    }
    if (const auto* parts = s.sub("partitions")) {
      for (const auto& p : *parts) {
        Section ps(p, "faults.partitions[]");
        net::PartitionWindow w;
        for (NodeId id : ps.require<std::vector<NodeId>>("side_a")) w.side_a.insert(id);
        for (NodeId id : ps.require<std::vector<NodeId>>("side_b")) w.side_b.insert(id);
        w.start = seconds(ps.require<std::uint64_t>("start_s"));
        w.duration = seconds(ps.require<std::uint64_t>("duration_s"));
        ps.finish();
        for (NodeId id : w.side_a)
          if (w.side_b.count(id))
            throw ConfigError("config: partition sides overlap at node " + std::to_string(id));
        cfg.faults.partitions.push_back(std::move(w));
      }
    }
    if (const auto* byz = s.sub("byzantine")) {
      for (const auto& b : *byz) {
        Section bs(b, "faults.byzantine[]");
        cfg.byzantine.emplace_back(bs.require<NodeId>("node"),
                                   detail::byzantine_from_string(bs.require<std::string>("behavior")));
        bs.finish();
      }
    }
    s.finish();
  }

  if (const auto* o = root.sub("output")) {
    Section s(*o, "output");
    cfg.output.dir = s.get<std::string>("dir", cfg.output.dir);
    cfg.output.chain_dump = s.get<bool>("chain_dump", cfg.output.chain_dump);
    cfg.output.receipts = s.get<bool>("receipts", cfg.output.receipts);
    cfg.output.state_snapshot = s.get<bool>("state_snapshot", cfg.output.state_snapshot);
    cfg.output.trace_file = s.get<bool>("trace_file", cfg.output.trace_file);
    s.finish();
  }

  root.finish();
  return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: invalid JSON in " + path + ": " + e.what());
  }
  return parse_config(j);
}

// Fill in derived values. Explicit settings are never overridden, so a
// finalized config echoed and re-parsed finalizes to itself.
inline void finalize_config(ExperimentConfig& cfg) {
  if (cfg.nodes == 0) throw ConfigError("config: topology.nodes must be >= 1");
  if (cfg.clients == 0 && cfg.workload.kind != bench::WorkloadKind::Analytics)
    throw ConfigError("config: topology.clients must be >= 1");
  if (cfg.consensus.batch_size == 0) throw ConfigError("config: consensus.batch_size must be >= 1");
  if (cfg.workload.read_ratio < 0.0 || cfg.workload.read_ratio > 1.0)
    throw ConfigError("config: workload.read_ratio must be in [0, 1]");
  if (cfg.net.corruption_rate < 0.0 || cfg.net.corruption_rate > 1.0)
    throw ConfigError("config: network.corruption_rate must be in [0, 1]");
  if (cfg.net.delay_min == 0 || cfg.net.delay_max < cfg.net.delay_min)
    throw ConfigError("config: network delays must satisfy 1 <= delay_min <= delay_max");
  for (const auto& c : cfg.faults.crashes)
    if (c.node >= cfg.nodes) throw ConfigError("config: crash of unknown node");
  cfg.workload.clients = cfg.clients;

  auto& cons = cfg.consensus;
  if (cons.authorities.empty()) {
    for (NodeId i = 0; i < cfg.nodes; ++i) cons.authorities.push_back(i);
  }
  for (NodeId a : cons.authorities)
    if (a >= cfg.nodes) throw ConfigError("config: authority id out of range");

  if (cons.engine == Engine::PoS && cons.stake.entries.empty()) {
    for (NodeId i = 0; i < cfg.nodes; ++i) cons.stake.entries[node_name(i)] = {1, 0};
  }

  if (cons.difficulty_t == 0) {
    if (cons.engine == Engine::PoW) {
      cons.difficulty_t = pow_threshold_for_interval(cons.block_interval, cfg.nodes);
    } else if (cons.engine == Engine::PoS) {
      const std::uint64_t total = cons.stake.total_balance();
      if (total == 0) throw ConfigError("config: stake table has zero total balance");
      if (cons.stake_function == StakeFunction::Balance) {
        cons.difficulty_t = pow_threshold_for_interval(cons.block_interval, 1);
        cons.difficulty_t /= total;
        if (cons.difficulty_t == 0) cons.difficulty_t = 1;
      } else {
        // Age-weighted hazard grows linearly; the median interval works out
        // near sqrt(2 ln2 * 2^256 / (t * total)), inverted here for t.
        u512 t = ((u512(1) << 256) * 1386) / 1000;
        t /= u512(total) * cons.block_interval * cons.block_interval;
        cons.difficulty_t = t == 0 ? u256(1) : u256(t);
      }
    }
  }

  if (cons.view_change_timeout == 0) {
    Tick est = 200;
    const double total_rate = cfg.workload.request_rate * cfg.clients;
    if (total_rate > 0) {
      est = static_cast<Tick>(cons.batch_size * 1000.0 / total_rate);
      est = std::clamp<Tick>(est, 50, 3000);
    }
    cons.view_change_timeout = std::clamp<Tick>(20 * est, 2000, 60000);
  }

  if (cfg.workload.saturating && cfg.workload.request_rate == 0) {
    // enough offered load to keep every shared inbox past its service rate
    const double capacity = cfg.net.service_rate * 1000.0;
    cfg.workload.request_rate = 2.5 * capacity / std::max(1u, cfg.clients);
  }
}

inline nlohmann::json config_echo(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["run"] = {{"label", cfg.label},
              {"duration_s", cfg.duration / kTicksPerSecond},
              {"seed", cfg.seed},
              {"stall_horizon_s", cfg.stall_horizon / kTicksPerSecond}};
  j["topology"] = {{"nodes", cfg.nodes},
                   {"clients", cfg.clients},
                   {"authorities", cfg.consensus.authorities}};
  nlohmann::json stake = nlohmann::json::object();
  for (const auto& [k, v] : cfg.consensus.stake.entries) stake[k] = v.balance;
  j["consensus"] = {{"engine", to_string(cfg.consensus.engine)},
                    {"difficulty_hex", u256_to_hex(cfg.consensus.difficulty_t)},
                    {"block_interval_ms", cfg.consensus.block_interval},
                    {"batch_size", cfg.consensus.batch_size},
                    {"batch_timeout_ms", cfg.consensus.batch_timeout},
                    {"step_duration_ms", cfg.consensus.step_duration},
                    {"view_change_timeout_ms", cfg.consensus.view_change_timeout},
                    {"checkpoint_interval", cfg.consensus.checkpoint_interval},
                    {"confirmation_depth", cfg.consensus.confirmation_depth},
                    {"buffer_future_view", cfg.consensus.buffer_future_view},
                    {"stake_function",
                     cfg.consensus.stake_function == StakeFunction::Nxt ? "nxt" : "balance"},
                    {"stake", stake}};
  j["state"] = {{"num_buckets", cfg.num_buckets}};
  j["execution"] = {{"steps_per_tick", cfg.exec.steps_per_tick},
                    {"step_budget", cfg.exec.step_budget}};
  j["workload"] = {{"kind", to_string(cfg.workload.kind)},
                   {"threads_per_client", cfg.workload.threads_per_client},
                   {"ops", cfg.workload.ops},
                   {"read_ratio", cfg.workload.read_ratio},
                   {"key_distribution",
                    cfg.workload.key_distribution == bench::KeyDistribution::Uniform ? "uniform"
                                                                                     : "zipfian"},
                   {"zipf_theta", cfg.workload.zipf_theta},
                   {"records", cfg.workload.records},
                   {"value_size", cfg.workload.value_size},
                   {"request_rate", cfg.workload.request_rate},
                   {"accounts", cfg.workload.accounts},
                   {"initial_balance", cfg.workload.initial_balance},
                   {"insufficient_every", cfg.workload.insufficient_every},
                   {"ioheavy_batch", cfg.workload.ioheavy_batch},
                   {"cpuheavy_n", cfg.workload.cpuheavy_n},
                   {"analytics_blocks", cfg.workload.analytics_blocks},
                   {"analytics_txns_per_block", cfg.workload.analytics_txns_per_block},
                   {"analytics_accounts", cfg.workload.analytics_accounts},
                   {"analytics_queries", cfg.workload.analytics_queries}};
  j["network"] = {{"queue_capacity", cfg.net.queue_capacity},
                  {"channel",
                   cfg.net.channel == net::ChannelMode::Shared ? "shared" : "segregated"},
                  {"service_rate", cfg.net.service_rate},
                  {"delay_min_ms", cfg.net.delay_min},
                  {"delay_max_ms", cfg.net.delay_max},
                  {"corruption_rate", cfg.net.corruption_rate}};
  nlohmann::json crashes = nlohmann::json::array();
  for (const auto& c : cfg.faults.crashes)
    crashes.push_back({{"node", c.node}, {"time_s", c.at / kTicksPerSecond}});
  nlohmann::json partitions = nlohmann::json::array();
  for (const auto& p : cfg.faults.partitions) {
    partitions.push_back({{"side_a", std::vector<NodeId>(p.side_a.begin(), p.side_a.end())},
                          {"side_b", std::vector<NodeId>(p.side_b.begin(), p.side_b.end())},
                          {"start_s", p.start / kTicksPerSecond},
                          {"duration_s", p.duration / kTicksPerSecond}});
  }
  nlohmann::json byz = nlohmann::json::array();
  for (const auto& [node, behavior] : cfg.byzantine) {
    byz.push_back({{"node", node},
                   {"behavior", behavior == net::ByzantineBehavior::EquivocateLeader
                                    ? "equivocate"
                                    : "withhold"}});
  }
  j["faults"] = {{"crashes", crashes}, {"partitions", partitions}, {"byzantine", byz}};
  return j;
}

}  // namespace blocksim
