#pragma once

#include <atomic>
#include <filesystem>
#include <optional>
#include <thread>

#include "blocksim/bench/analytics.hpp"
#include "blocksim/bench/observer.hpp"
#include "blocksim/config.hpp"

namespace blocksim::bench {

struct RunResult {
  MetricsReport report;
  Digest trace_hash;
  std::uint64_t trace_events = 0;
  std::string report_json;
  std::string series_csv;
  std::string out_dir;  // empty when nothing was written
};

namespace detail {

inline std::string run_dir(const ExperimentConfig& cfg) {
  return cfg.output.dir + "/" + cfg.label + "-s" + std::to_string(cfg.seed);
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw ConfigError("cannot write " + path);
  out << content;
}

}  // namespace detail

// Builds the deterministic genesis for a finalized-or-not run: the preloaded
// state's root is committed in the genesis header so every replica starts
// byte-identical.
inline BlockPtr make_genesis(const ExperimentConfig& cfg, const net::StatePreload& preload) {
  StateStore store(cfg.num_buckets);
  ContractRuntime runtime(store);
  register_builtin_contracts(runtime);
  if (preload) preload(runtime, store);
  Block genesis;
  genesis.header.state_root = store.state_root();
  return std::make_shared<const Block>(std::move(genesis));
}

inline RunResult run_analytics(ExperimentConfig cfg) {
  AnalyticsData data = build_analytics_chain(cfg.workload, cfg.seed, cfg.num_buckets);

  Rng rng(derive_seed(cfg.seed, "analytics-queries", 0));
  Sha256Stream answers;
  const auto blocks = static_cast<std::int64_t>(cfg.workload.analytics_blocks);
  for (std::uint32_t q = 0; q < cfg.workload.analytics_queries; ++q) {
    const std::int64_t i = static_cast<std::int64_t>(rng.uniform(0, static_cast<std::uint64_t>(blocks)));
    const std::int64_t j =
        static_cast<std::int64_t>(rng.uniform(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(blocks))) + 1;
    const std::string acct =
        analytics_account(static_cast<std::uint32_t>(rng.uniform(0, cfg.workload.analytics_accounts - 1)));
    const std::int64_t a1 = analytics_q1(*data.runtime, i, j);
    const std::int64_t a2 = analytics_q2(*data.runtime, acct, i, j);
    char line[128];
    std::snprintf(line, sizeof line, "q %lld %lld %s %lld %lld\n", static_cast<long long>(i),
                  static_cast<long long>(j), acct.c_str(), static_cast<long long>(a1),
                  static_cast<long long>(a2));
    answers.update(line);
  }

  RunResult result;
  MetricsReport& rep = result.report;
  rep.label = cfg.label;
  rep.engine = to_string(cfg.consensus.engine);
  rep.workload = "analytics";
  rep.nodes = 1;
  rep.clients = 1;
  rep.seed = cfg.seed;
  rep.duration = cfg.workload.analytics_blocks;
  rep.submitted = rep.committed =
      cfg.workload.analytics_blocks * cfg.workload.analytics_txns_per_block;
  rep.receipts_committed = rep.committed;
  rep.security = {cfg.workload.analytics_blocks, cfg.workload.analytics_blocks, 0, 1.0};
  rep.final_state_root = data.store->state_root().hex();
  rep.answers_digest = answers.finish().hex();
  rep.last_block_tick = cfg.workload.analytics_blocks;

  result.trace_hash = Sha256Stream().finish();
  result.report_json = rep.report_json();
  result.series_csv = rep.series_csv();

  if (!cfg.output.dir.empty()) {
    const std::string dir = detail::run_dir(cfg);
    std::filesystem::create_directories(dir);
    detail::write_file(dir + "/report.json", result.report_json);
    detail::write_file(dir + "/series.csv", result.series_csv);
    if (cfg.output.chain_dump) {
      std::ofstream chain_out(dir + "/chain.jsonl");
      ChainView view(data.blocks[0], ForkChoiceMode::Finalized, 0);
      for (size_t i = 1; i < data.blocks.size(); ++i) view.append(data.blocks[i]);
      view.dump_jsonl(chain_out);
    }
    if (cfg.output.state_snapshot) {
      std::ofstream snap(dir + "/state.jsonl");
      data.store->dump_snapshot(snap);
    }
    nlohmann::json meta;
    meta["config"] = config_echo(cfg);
    meta["trace_hash"] = result.trace_hash.hex();
    meta["trace_events"] = 0;
    meta["report_sha256"] = sha256(result.report_json).hex();
    detail::write_file(dir + "/trace-meta.json", meta.dump(2) + "\n");
    result.out_dir = dir;
  }
  return result;
}

inline RunResult run_experiment(ExperimentConfig cfg) {
  finalize_config(cfg);
  if (cfg.workload.kind == WorkloadKind::Analytics) return run_analytics(std::move(cfg));

  const net::StatePreload preload = make_preload(cfg.workload, cfg.seed);
  const BlockPtr genesis = make_genesis(cfg, preload);

  std::string out_dir;
  std::optional<std::ofstream> receipts_stream;
  net::TraceSink trace;
  if (!cfg.output.dir.empty()) {
    out_dir = detail::run_dir(cfg);
    std::filesystem::create_directories(out_dir);
    if (cfg.output.trace_file) trace.open(out_dir + "/trace.jsonl");
    if (cfg.output.receipts) receipts_stream.emplace(out_dir + "/receipts.jsonl");
  }

  net::SimNetwork network(cfg.nodes, cfg.net, cfg.faults, derive_seed(cfg.seed, "net", 0), &trace);

  ObserverOptions obs_opts;
  obs_opts.assert_invariants = cfg.assert_invariants;
  obs_opts.replay_state = cfg.consensus.finalized();
  if (receipts_stream) obs_opts.receipts_out = &*receipts_stream;
  if (cfg.workload.kind == WorkloadKind::Smallbank) {
    for (std::uint32_t i = 0; i < cfg.workload.accounts; ++i)
      obs_opts.conservation_accounts.push_back(account_name(i));
    obs_opts.conservation_total =
        cfg.workload.initial_balance * static_cast<std::int64_t>(cfg.workload.accounts);
  }
  Observer observer(genesis, cfg.consensus, cfg.num_buckets, preload, std::move(obs_opts));

  net::BlockHook hook = [&observer](NodeId node, const BlockPtr& b, Tick now, bool committed) {
    observer.on_block(node, b, now, committed);
  };

  std::vector<std::unique_ptr<net::BaseNode>> nodes;
  nodes.reserve(cfg.nodes);
  for (NodeId id = 0; id < cfg.nodes; ++id) {
    net::NodeConfig ncfg;
    ncfg.id = id;
    ncfg.num_nodes = cfg.nodes;
    ncfg.consensus = cfg.consensus;
    ncfg.exec = cfg.exec;
    ncfg.num_buckets = cfg.num_buckets;
    ncfg.seed = cfg.seed;
    for (const auto& [bz_node, behavior] : cfg.byzantine)
      if (bz_node == id) ncfg.byzantine = behavior;
    nodes.push_back(net::make_node(ncfg, genesis, preload, hook));
  }

  std::vector<ClientActor> clients;
  clients.reserve(cfg.clients);
  const std::uint64_t per_client_ops = cfg.workload.ops / std::max(1u, cfg.clients);
  for (std::uint32_t c = 0; c < cfg.clients; ++c) {
    std::uint64_t budget = cfg.workload.ops == 0 ? 0 : per_client_ops;
    if (cfg.workload.ops != 0 && c == 0) budget += cfg.workload.ops % cfg.clients;
    clients.emplace_back(c, cfg.workload, cfg.seed, budget);
  }
  const bool closed_loop = cfg.workload.request_rate == 0;

  std::vector<TxnPtr> tick_submissions;
  for (Tick t = 1; t <= cfg.duration; ++t) {
    network.set_now(t);
    for (const auto& c : cfg.faults.crashes)
      if (c.at == t) network.crash(c.node);
    if (network.heals_at(t)) {
      for (auto& node : nodes) {
        if (network.crashed(node->id())) continue;
        net::NetCtx ctx(network, net::node_endpoint(node->id()));
        node->announce_tip(ctx);
      }
    }

    network.deliver_due(t);

    for (auto& node : nodes) {
      const NodeId id = node->id();
      if (network.crashed(id) || node->busy(t)) continue;
      net::NetCtx ctx(network, net::node_endpoint(id));
      for (auto& msg : network.drain(id)) node->handle(std::move(msg), ctx);
      if (node->busy(t)) continue;  // execution triggered by a processed message
      node->tick(ctx);
    }

    for (auto& client : clients) {
      net::NetCtx ctx(network, net::client_endpoint(client.index()));
      tick_submissions.clear();
      client.on_tick(ctx, &tick_submissions);
      if (closed_loop)
        for (const auto& txn : tick_submissions) observer.track_closed_loop(txn, client.index());
    }
    for (std::uint32_t c : observer.take_confirm_wakeups()) clients[c].notify_confirmed(1);

    if (t % kTicksPerSecond == 0) {
      std::uint64_t vc = 0;
      for (const auto& node : nodes) vc += node->view_changes();
      observer.sample_second(static_cast<std::uint32_t>(t / kTicksPerSecond),
                             network.counters(), vc);
    }
  }
  observer.finish(cfg.duration);

  RunResult result;
  MetricsReport& rep = result.report;
  rep.label = cfg.label;
  rep.engine = to_string(cfg.consensus.engine);
  rep.workload = to_string(cfg.workload.kind);
  rep.nodes = cfg.nodes;
  rep.clients = cfg.clients;
  rep.seed = cfg.seed;
  rep.duration = cfg.duration;
  for (const auto& c : clients) rep.submitted += c.submitted();
  rep.committed = observer.committed_txns();
  rep.receipts_committed = observer.receipts_committed();
  rep.receipts_reverted = observer.receipts_reverted();
  rep.receipts_aborted = observer.receipts_aborted();
  rep.throughput_tps =
      static_cast<double>(rep.committed) / (static_cast<double>(cfg.duration) / 1000.0);
  rep.latency = LatencyStats::from(observer.latencies());
  rep.security = observer.security();
  rep.last_block_tick = observer.last_block_tick();
  rep.max_block_gap = observer.max_block_gap();
  rep.stalled = cfg.duration - observer.last_block_tick() >= cfg.stall_horizon;
  for (const auto& node : nodes) rep.view_changes += node->view_changes();
  rep.net = network.counters();
  rep.in_flight_end = network.in_flight();
  rep.final_state_root = observer.final_state_root().hex();
  rep.series = observer.series();

  result.trace_hash = trace.finish_hash();
  result.trace_events = trace.count();
  result.report_json = rep.report_json();
  result.series_csv = rep.series_csv();

  if (!out_dir.empty()) {
    detail::write_file(out_dir + "/report.json", result.report_json);
    detail::write_file(out_dir + "/series.csv", result.series_csv);
    if (cfg.output.chain_dump) {
      std::ofstream chain_out(out_dir + "/chain.jsonl");
      observer.chain().dump_jsonl(chain_out);
    }
    if (cfg.output.state_snapshot) {
      std::ofstream snap(out_dir + "/state.jsonl");
      observer.replay_store().dump_snapshot(snap);
    }
    nlohmann::json meta;
    meta["config"] = config_echo(cfg);
    meta["trace_hash"] = result.trace_hash.hex();
    meta["trace_events"] = result.trace_events;
    meta["report_sha256"] = sha256(result.report_json).hex();
    detail::write_file(out_dir + "/trace-meta.json", meta.dump(2) + "\n");
    result.out_dir = out_dir;
  }
  return result;
}

enum class SweepDimension { Nodes, Clients, Both };

inline SweepDimension sweep_dimension_from_string(const std::string& s) {
  if (s == "nodes") return SweepDimension::Nodes;
  if (s == "clients") return SweepDimension::Clients;
  if (s == "both") return SweepDimension::Both;
  throw ConfigError("unknown sweep dimension: " + s);
}

// Scalability series: one run per point; authorities/stake re-derived for the
// point's node count. Points shard across worker threads, each run single
// threaded and independently seeded.
inline std::vector<RunResult> run_sweep(const ExperimentConfig& base, SweepDimension dim,
                                        const std::vector<std::uint32_t>& points,
                                        std::uint32_t jobs = 1) {
  std::vector<ExperimentConfig> cfgs;
  for (std::uint32_t p : points) {
    ExperimentConfig cfg = base;
    if (dim == SweepDimension::Nodes || dim == SweepDimension::Both) {
      cfg.nodes = p;
      cfg.consensus.authorities.clear();  // re-derive for the new width
      cfg.consensus.stake.entries.clear();
      if (cfg.consensus.engine == Engine::PoW || cfg.consensus.engine == Engine::PoS)
        cfg.consensus.difficulty_t = 0;
    }
    if (dim == SweepDimension::Clients || dim == SweepDimension::Both) cfg.clients = p;
    cfg.label = base.label + "-" + (dim == SweepDimension::Clients ? "c" : "n") + std::to_string(p);
    cfgs.push_back(std::move(cfg));
  }

  std::vector<RunResult> results(cfgs.size());
  if (jobs <= 1) {
    for (size_t i = 0; i < cfgs.size(); ++i) results[i] = run_experiment(cfgs[i]);
    return results;
  }
  std::vector<std::thread> workers;
  std::atomic<size_t> next{0};
  for (std::uint32_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= cfgs.size()) return;
        results[i] = run_experiment(cfgs[i]);
      }
    });
  }
  for (auto& th : workers) th.join();
  return results;
}

struct SecurityResult {
  RunResult run;
  bool fork_exposed = false;
};

// Partition-attack run: the per-second delta series is the exposure measure.
// Finalized engines must stay fork-free throughout.
inline SecurityResult security_run(ExperimentConfig cfg) {
  SecurityResult out;
  out.run = run_experiment(cfg);
  out.fork_exposed = out.run.report.security.delta > 0;
  if (cfg.assert_invariants && cfg.consensus.finalized()) {
    for (const auto& s : out.run.report.series) {
      if (s.delta != 0)
        throw InvariantFailure("finalized engine forked at second " + std::to_string(s.second));
    }
  }
  return out;
}

}  // namespace blocksim::bench
