#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "blocksim/common.hpp"
#include "blocksim/net/sim.hpp"

#include "json.hpp"

namespace blocksim::bench {

struct LatencyStats {
  std::uint64_t count = 0;
  Tick p50 = 0;
  Tick p95 = 0;
  Tick p99 = 0;
  Tick max = 0;
  double mean = 0.0;

  static LatencyStats from(std::vector<Tick> samples) {
    LatencyStats s;
    s.count = samples.size();
    if (samples.empty()) return s;
    std::sort(samples.begin(), samples.end());
    auto rank = [&](double p) {
      const size_t idx = static_cast<size_t>(std::max<long>(
          0, static_cast<long>((p * static_cast<double>(samples.size()) + 99) / 100) - 1));
      return samples[std::min(idx, samples.size() - 1)];
    };
    s.p50 = rank(50);
    s.p95 = rank(95);
    s.p99 = rank(99);
    s.max = samples.back();
    long double sum = 0;
    for (Tick t : samples) sum += t;
    s.mean = static_cast<double>(sum / samples.size());
    return s;
  }
};

struct SecuritySnapshot {
  std::uint64_t total_blocks = 0;
  std::uint64_t main_blocks = 0;
  std::uint64_t delta = 0;
  double ratio = 1.0;  // main / total, 1.0 for an empty chain
};

struct SecondSample {
  std::uint32_t second = 0;
  std::uint64_t committed_txns = 0;  // cumulative
  std::uint64_t total_blocks = 0;
  std::uint64_t main_blocks = 0;
  std::uint64_t delta = 0;
  std::uint64_t dropped = 0;
  std::uint64_t view_changes = 0;
};

struct MetricsReport {
  std::string label;
  std::string engine;
  std::string workload;
  std::uint32_t nodes = 0;
  std::uint32_t clients = 0;
  std::uint64_t seed = 0;
  Tick duration = 0;

  std::uint64_t submitted = 0;
  std::uint64_t committed = 0;          // unique transactions confirmed
  std::uint64_t receipts_committed = 0;
  std::uint64_t receipts_reverted = 0;
  std::uint64_t receipts_aborted = 0;
  double throughput_tps = 0.0;
  LatencyStats latency;
  SecuritySnapshot security;

  bool stalled = false;
  Tick last_block_tick = 0;
  Tick max_block_gap = 0;
  std::uint64_t view_changes = 0;
  net::NetCounters net;
  std::uint64_t in_flight_end = 0;
  std::string final_state_root;
  std::string answers_digest;  // analytics runs: hash over query answers

  std::vector<SecondSample> series;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["label"] = label;
    j["engine"] = engine;
    j["workload"] = workload;
    j["nodes"] = nodes;
    j["clients"] = clients;
    j["seed"] = seed;
    j["duration_ticks"] = duration;
    j["submitted"] = submitted;
    j["committed"] = committed;
    j["receipts"] = {{"committed", receipts_committed},
                     {"reverted", receipts_reverted},
                     {"aborted", receipts_aborted}};
    j["throughput_tps"] = throughput_tps;
    j["latency_ms"] = {{"count", latency.count}, {"p50", latency.p50},  {"p95", latency.p95},
                       {"p99", latency.p99},     {"max", latency.max}, {"mean", latency.mean}};
    j["security"] = {{"total_blocks", security.total_blocks},
                     {"main_blocks", security.main_blocks},
                     {"delta", security.delta},
                     {"ratio", security.ratio}};
    j["stalled"] = stalled;
    j["last_block_tick"] = last_block_tick;
    j["max_block_gap"] = max_block_gap;
    j["view_changes"] = view_changes;
    j["network"] = {{"sent", net.sent},
                    {"delivered", net.delivered},
                    {"dropped_queue", net.dropped_queue},
                    {"dropped_partition", net.dropped_partition},
                    {"dropped_crash", net.dropped_crash},
                    {"corrupted", net.corrupted},
                    {"in_flight_end", in_flight_end}};
    j["final_state_root"] = final_state_root;
    if (!answers_digest.empty()) j["answers_digest"] = answers_digest;
    return j;
  }

  std::string report_json() const { return to_json().dump(2) + "\n"; }

  // gnuplot-friendly: one sample row per second.
  std::string series_csv() const {
    std::string out =
        "# second committed_txns total_blocks main_blocks delta dropped view_changes\n";
    char buf[160];
    for (const auto& s : series) {
      std::snprintf(buf, sizeof buf, "%u %llu %llu %llu %llu %llu %llu\n", s.second,
                    static_cast<unsigned long long>(s.committed_txns),
                    static_cast<unsigned long long>(s.total_blocks),
                    static_cast<unsigned long long>(s.main_blocks),
                    static_cast<unsigned long long>(s.delta),
                    static_cast<unsigned long long>(s.dropped),
                    static_cast<unsigned long long>(s.view_changes));
      out += buf;
    }
    return out;
  }
};

}  // namespace blocksim::bench
