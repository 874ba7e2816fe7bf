#pragma once

#include <cstdio>
#include <deque>
#include <fstream>
#include <optional>
#include <queue>
#include <set>
#include <vector>

#include "blocksim/net/message.hpp"
#include "blocksim/rng.hpp"

namespace blocksim::net {

enum class ChannelMode : std::uint8_t { Shared, Segregated };

struct NetConfig {
  std::uint32_t queue_capacity = 1000;
  ChannelMode channel = ChannelMode::Shared;
  std::uint32_t service_rate = 4;     // messages a node processes per tick
  Tick delay_min = 1;
  Tick delay_max = 5;
  double corruption_rate = 0.0;
};

struct CrashEvent {
  NodeId node = 0;
  Tick at = 0;
};

struct PartitionWindow {
  std::set<NodeId> side_a;
  std::set<NodeId> side_b;
  Tick start = 0;
  Tick duration = 0;

  bool active(Tick t) const { return t >= start && t < start + duration; }

  bool blocks(Tick t, NodeId a, NodeId b) const {
    if (!active(t)) return false;
    return (side_a.count(a) && side_b.count(b)) || (side_a.count(b) && side_b.count(a));
  }
};

struct FaultSchedule {
  std::vector<CrashEvent> crashes;
  std::vector<PartitionWindow> partitions;
};

struct NetCounters {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped_queue = 0;
  std::uint64_t dropped_partition = 0;
  std::uint64_t dropped_crash = 0;
  std::uint64_t corrupted = 0;

  std::uint64_t dropped_total() const {
    return dropped_queue + dropped_partition + dropped_crash;
  }
};

// Streams one line per message fate (delivered or dropped) into the running
// hash, and optionally to a file. Lines are hashed even when not written so
// replay verification works without multi-gigabyte traces.
class TraceSink {
 public:
  void open(const std::string& path) {
    file_.emplace(path);
    if (!file_->good()) throw ConfigError("cannot open trace file: " + path);
  }

  void event(Tick t, std::string_view src, std::string_view dst, std::string_view kind,
             const char* drop) {
    char buf[160];
    int n;
    if (drop) {
      n = std::snprintf(buf, sizeof buf,
                        "{\"t\":%llu,\"src\":\"%.*s\",\"dst\":\"%.*s\",\"kind\":\"%.*s\","
                        "\"drop\":\"%s\"}\n",
                        static_cast<unsigned long long>(t), int(src.size()), src.data(),
                        int(dst.size()), dst.data(), int(kind.size()), kind.data(), drop);
    } else {
      n = std::snprintf(buf, sizeof buf,
                        "{\"t\":%llu,\"src\":\"%.*s\",\"dst\":\"%.*s\",\"kind\":\"%.*s\"}\n",
                        static_cast<unsigned long long>(t), int(src.size()), src.data(),
                        int(dst.size()), dst.data(), int(kind.size()), kind.data());
    }
    hash_.update(std::string_view(buf, static_cast<size_t>(n)));
    ++count_;
    if (file_) file_->write(buf, n);
  }

  Digest finish_hash() { return hash_.finish(); }
  std::uint64_t count() const { return count_; }

 private:
  Sha256Stream hash_;
  std::uint64_t count_ = 0;
  std::optional<std::ofstream> file_;
};

// Seeded discrete-event transport: uniform per-message delays, bounded
// per-node inboxes with drop-on-full, crash and partition faults, and
// probabilistic payload corruption detected by receivers.
class SimNetwork {
 public:
  SimNetwork(std::uint32_t num_nodes, NetConfig cfg, FaultSchedule faults, std::uint64_t seed,
             TraceSink* trace = nullptr)
      : cfg_(cfg), faults_(std::move(faults)), rng_(seed), trace_(trace),
        inboxes_(num_nodes) {}

  Tick now() const { return now_; }
  void set_now(Tick t) { now_ = t; }
  const NetCounters& counters() const { return counters_; }
  std::uint32_t num_nodes() const { return static_cast<std::uint32_t>(inboxes_.size()); }

  bool crashed(NodeId n) const { return crashed_.count(n) != 0; }

  void crash(NodeId n) { crashed_.insert(n); }

  bool partitioned(NodeId a, NodeId b) const {
    for (const auto& w : faults_.partitions)
      if (w.blocks(now_, a, b)) return true;
    return false;
  }

  // True exactly at the first tick after a partition window closes.
  bool heals_at(Tick t) const {
    for (const auto& w : faults_.partitions)
      if (w.start + w.duration == t) return true;
    return false;
  }

  void send(Endpoint src, NodeId dst, Message msg) {
    ++counters_.sent;
    msg.src = src;
    msg.dst = dst;
    const Tick delay = cfg_.delay_min == cfg_.delay_max
                           ? cfg_.delay_min
                           : rng_.uniform(cfg_.delay_min, cfg_.delay_max);
    pending_.push(Delivery{now_ + delay, next_seq_++, std::move(msg)});
  }

  // Moves everything due at `t` into node inboxes, applying faults.
  void deliver_due(Tick t) {
    while (!pending_.empty() && pending_.top().at <= t) {
      Delivery d = pending_.top();
      pending_.pop();
      route(t, std::move(d.msg));
    }
  }

  // Messages the node may process this tick. Segregated mode drains the
  // dedicated consensus queue completely, then takes the service-rate share
  // from the bounded shared queue.
  std::vector<Message> drain(NodeId n) {
    std::vector<Message> out;
    Inbox& inbox = inboxes_[n];
    if (cfg_.channel == ChannelMode::Segregated) {
      while (!inbox.consensus.empty()) {
        out.push_back(std::move(inbox.consensus.front()));
        inbox.consensus.pop_front();
      }
    }
    for (std::uint32_t i = 0; i < cfg_.service_rate && !inbox.shared.empty(); ++i) {
      out.push_back(std::move(inbox.shared.front()));
      inbox.shared.pop_front();
    }
    counters_.delivered += out.size();
    return out;
  }

  std::uint64_t queue_length(NodeId n) const {
    return inboxes_[n].shared.size() + inboxes_[n].consensus.size();
  }

  std::uint64_t in_flight() const {
    std::uint64_t total = pending_.size();
    for (const auto& inbox : inboxes_) total += inbox.shared.size() + inbox.consensus.size();
    return total;
  }

  std::uint64_t drop_count(NodeId n) const { return inboxes_[n].drop_count; }

  const FaultSchedule& faults() const { return faults_; }

 private:
  struct Inbox {
    std::deque<Message> shared;
    std::deque<Message> consensus;
    std::uint64_t drop_count = 0;
  };

  struct Delivery {
    Tick at;
    std::uint64_t seq;
    Message msg;

    bool operator>(const Delivery& o) const {
      return at != o.at ? at > o.at : seq > o.seq;
    }
  };

  void route(Tick t, Message msg) {
    const char* kind = to_string(msg.kind);
    const std::string src_name = endpoint_name(msg.src);
    const std::string dst_name = endpoint_name(node_endpoint(msg.dst));
    if (crashed_.count(msg.dst)) {
      ++counters_.dropped_crash;
      if (trace_) trace_->event(t, src_name, dst_name, kind, "crash");
      return;
    }
    if (is_node(msg.src)) {
      for (const auto& w : faults_.partitions) {
        if (w.blocks(t, static_cast<NodeId>(msg.src), msg.dst)) {
          ++counters_.dropped_partition;
          if (trace_) trace_->event(t, src_name, dst_name, kind, "partition");
          return;
        }
      }
    }
    if (cfg_.corruption_rate > 0.0 && rng_.chance(cfg_.corruption_rate)) {
      msg.corrupted = true;
      ++counters_.corrupted;
    }
    Inbox& inbox = inboxes_[msg.dst];
    const bool segregate = cfg_.channel == ChannelMode::Segregated && is_consensus(msg.kind);
    if (segregate) {
      inbox.consensus.push_back(std::move(msg));
    } else {
      if (inbox.shared.size() >= cfg_.queue_capacity) {
        ++inbox.drop_count;
        ++counters_.dropped_queue;
        if (trace_) trace_->event(t, src_name, dst_name, kind, "queue");
        return;
      }
      inbox.shared.push_back(std::move(msg));
    }
    if (trace_) trace_->event(t, src_name, dst_name, kind, nullptr);
  }

  NetConfig cfg_;
  FaultSchedule faults_;
  Rng rng_;
  TraceSink* trace_;
  Tick now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Delivery, std::vector<Delivery>, std::greater<>> pending_;
  std::vector<Inbox> inboxes_;
  std::set<NodeId> crashed_;
  NetCounters counters_;
};

}  // namespace blocksim::net
