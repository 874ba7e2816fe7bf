#pragma once

#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "blocksim/consensus/config.hpp"
#include "blocksim/signer.hpp"

namespace blocksim::pbft {

// Three-phase replication: pre-prepare / prepare / commit, with view changes
// on timeout and periodic checkpoints. This is a pure deterministic state
// machine — inputs are messages and clock ticks, outputs are messages to
// broadcast and blocks that reached commit quorum. Networking, block building
// and execution live with the caller.

struct PrePrepare {
  std::uint64_t view = 0;
  std::uint64_t seq = 0;  // equals the proposed block height
  BlockPtr block;
  NodeId leader = 0;
  Digest signature;
};

struct VoteMsg {  // prepare or commit, distinguished by phase
  std::uint8_t phase = 0;
  std::uint64_t view = 0;
  std::uint64_t seq = 0;
  Digest block_hash;
  NodeId node = 0;
  Digest signature;
};

struct CheckpointMsg {
  Height height = 0;
  Digest state_root;
  NodeId node = 0;
  Digest signature;
};

struct PreparedProof {
  std::uint64_t view = 0;
  std::uint64_t seq = 0;
  BlockPtr block;
};

struct ViewChangeMsg {
  std::uint64_t new_view = 0;
  Height stable_height = 0;
  Digest stable_root;
  std::vector<PreparedProof> prepared;
  NodeId node = 0;
  Digest signature;  // over the view number
};

struct NewViewMsg {
  std::uint64_t view = 0;
  std::vector<NodeId> voters;  // view-change quorum, signatures alongside
  std::vector<Digest> voter_sigs;
  std::vector<PreparedProof> reproposals;
  NodeId leader = 0;
  Digest signature;
};

using Message = std::variant<PrePrepare, VoteMsg, CheckpointMsg, ViewChangeMsg, NewViewMsg>;

constexpr std::uint8_t kPhasePrePrepare = 0;
constexpr std::uint8_t kPhasePrepare = 1;
constexpr std::uint8_t kPhaseCommit = 2;
constexpr std::uint8_t kPhaseCheckpoint = 4;

inline Digest view_change_digest(std::uint64_t new_view) {
  ByteWriter w;
  w.u8(3);
  w.u64(new_view);
  return sha256(w.data());
}

struct Config {
  NodeId id = 0;
  std::uint32_t n = 4;
  Tick view_change_timeout = 4000;
  std::uint32_t checkpoint_interval = 10;
  bool buffer_future_view = false;

  QuorumRules rules() const { return QuorumRules{n}; }
  std::uint32_t quorum() const { return rules().quorum(); }
  NodeId leader_of(std::uint64_t view) const { return static_cast<NodeId>(view % n); }
};

struct Output {
  std::vector<Message> broadcast;
  std::vector<BlockPtr> committed;  // contiguous, height order, quorum certs attached
};

class Replica {
 public:
  Replica(Config cfg, Digest genesis_hash, const Signer& signer = default_signer())
      : cfg_(cfg), signer_(signer), last_committed_hash_(genesis_hash) {}

  std::uint64_t view() const { return view_; }
  std::uint64_t target_view() const { return target_view_; }
  bool is_leader() const { return cfg_.leader_of(view_) == cfg_.id; }
  NodeId id() const { return cfg_.id; }
  Height committed_height() const { return committed_height_; }
  const Digest& committed_hash() const { return last_committed_hash_; }
  Height stable_checkpoint() const { return stable_height_; }
  std::uint64_t view_changes_sent() const { return view_changes_sent_; }

  // The leader may propose when its view is settled and the next slot is free.
  bool ready_to_propose() const {
    if (!is_leader() || view_ != target_view_) return false;
    auto it = slots_.find(committed_height_ + 1);
    return it == slots_.end() || !it->second.pre_prepare;
  }

  // Leader path; the caller builds the block on the committed tip.
  Output propose(BlockPtr block, Tick now) {
    Output out;
    if (!ready_to_propose()) return out;
    PrePrepare pp;
    pp.view = view_;
    pp.seq = block->header.height;
    pp.block = std::move(block);
    pp.leader = cfg_.id;
    pp.signature = sign_as(cfg_.id, kPhasePrePrepare, pp.view, pp.seq, pp.block->hash());
    out.broadcast.push_back(pp);
    handle_pre_prepare(pp, now, out);
    return out;
  }

  Output on_message(const Message& msg, Tick now) {
    Output out;
    std::visit([&](const auto& m) { dispatch(m, now, out); }, msg);
    return out;
  }

  // Progress timer: with work pending and no commit inside the timeout, ask
  // for the next view. Every further expiry advances the target view again,
  // so a run of crashed leaders is eventually skipped.
  Output on_tick(Tick now, bool pending_work) {
    Output out;
    if (deadline_ == 0 || (!pending_work && view_ == target_view_)) {
      deadline_ = now + cfg_.view_change_timeout;
      return out;
    }
    if (now < deadline_) return out;
    deadline_ = now + cfg_.view_change_timeout;
    ++target_view_;
    broadcast_view_change(out);
    return out;
  }

  // Called after the node executed up to `height`; emits periodic checkpoints.
  Output note_executed(Height height, const Digest& state_root) {
    Output out;
    if (cfg_.checkpoint_interval == 0 || height % cfg_.checkpoint_interval != 0) return out;
    CheckpointMsg cp;
    cp.height = height;
    cp.state_root = state_root;
    cp.node = cfg_.id;
    cp.signature =
        signer_.sign(node_name(cfg_.id), vote_digest(0, height, state_root, kPhaseCheckpoint));
    out.broadcast.push_back(cp);
    record_checkpoint(cp);
    return out;
  }

  // The node caught up through externally certified blocks (chain sync).
  void fast_forward(Height height, const Digest& block_hash, Tick now) {
    if (height <= committed_height_) return;
    committed_height_ = height;
    last_committed_hash_ = block_hash;
    while (!slots_.empty() && slots_.begin()->first <= height) slots_.erase(slots_.begin());
    note_progress(now);
  }

 private:
  struct Slot {
    std::optional<PrePrepare> pre_prepare;             // current view's proposal
    std::map<std::uint64_t, std::set<NodeId>> prepares;
    std::map<std::uint64_t, std::map<NodeId, Digest>> commits;
    bool sent_prepare = false;
    bool sent_commit = false;
    bool committed = false;
    BlockPtr block;
  };

  void dispatch(const PrePrepare& m, Tick now, Output& out) { handle_pre_prepare(m, now, out); }
  void dispatch(const VoteMsg& m, Tick now, Output& out) { handle_vote(m, now, out); }
  void dispatch(const CheckpointMsg& m, Tick, Output&) { record_checkpoint(m); }
  void dispatch(const ViewChangeMsg& m, Tick now, Output& out) { handle_view_change(m, now, out); }
  void dispatch(const NewViewMsg& m, Tick now, Output& out) { handle_new_view(m, now, out); }

  void handle_pre_prepare(const PrePrepare& m, Tick now, Output& out) {
    if (m.view != view_) {
      if (m.view > view_) maybe_buffer(m);
      return;
    }
    if (m.leader != cfg_.leader_of(m.view)) return;
    if (!verify_as(m.leader, kPhasePrePrepare, m.view, m.seq, m.block->hash(), m.signature))
      return;
    if (m.seq != committed_height_ + 1) return;
    if (m.block->header.parent_hash != last_committed_hash_) return;

    Slot& slot = slots_[m.seq];
    if (slot.pre_prepare) {
      if (slot.pre_prepare->view == m.view) {
        // At most one block per (view, seq); a conflicting proposal from an
        // equivocating leader gets no vote.
        if (slot.pre_prepare->block->hash() != m.block->hash()) return;
        if (slot.sent_prepare || cfg_.id == m.leader) return;  // duplicate
      } else if (slot.pre_prepare->view > m.view) {
        return;  // stale proposal from an abandoned view
      } else {
        slot.sent_prepare = false;  // superseded by a newer view's proposal
        slot.sent_commit = false;
      }
    }
    slot.pre_prepare = m;
    slot.block = m.block;
    slot.prepares[m.view].insert(m.leader);  // the pre-prepare is the leader's prepare

    if (cfg_.id != m.leader) {
      slot.sent_prepare = true;
      out.broadcast.push_back(make_vote(kPhasePrepare, m.view, m.seq, m.block->hash()));
      slot.prepares[m.view].insert(cfg_.id);
    }
    check_prepared(m.seq, m.view, now, out);
    check_committed(m.seq, m.view, now, out);
  }

  void handle_vote(const VoteMsg& m, Tick now, Output& out) {
    if (m.view != view_) {
      if (m.view > view_) maybe_buffer(m);
      return;
    }
    if (m.seq <= committed_height_) return;  // stale
    if (!verify_as(m.node, m.phase, m.view, m.seq, m.block_hash, m.signature)) return;
    Slot& slot = slots_[m.seq];
    if (slot.pre_prepare && slot.pre_prepare->view == m.view &&
        slot.pre_prepare->block->hash() != m.block_hash)
      return;
    if (m.phase == kPhasePrepare) {
      slot.prepares[m.view].insert(m.node);
      check_prepared(m.seq, m.view, now, out);
    } else if (m.phase == kPhaseCommit) {
      slot.commits[m.view][m.node] = m.signature;
      check_committed(m.seq, m.view, now, out);
    }
  }

  // Prepared: pre-prepare plus a quorum of matching prepares (the leader's
  // pre-prepare counting as its prepare).
  void check_prepared(std::uint64_t seq, std::uint64_t view, Tick now, Output& out) {
    Slot& slot = slots_[seq];
    if (!slot.pre_prepare || slot.pre_prepare->view != view || slot.sent_commit) return;
    if (slot.prepares[view].size() < cfg_.quorum()) return;
    slot.sent_commit = true;
    VoteMsg v = make_vote(kPhaseCommit, view, seq, slot.block->hash());
    out.broadcast.push_back(v);
    slot.commits[view][cfg_.id] = v.signature;
    check_committed(seq, view, now, out);
  }

  void check_committed(std::uint64_t seq, std::uint64_t view, Tick now, Output& out) {
    Slot& slot = slots_[seq];
    if (slot.committed || !slot.pre_prepare || slot.pre_prepare->view != view) return;
    if (slot.commits[view].size() < cfg_.quorum()) return;
    slot.committed = true;

    Block certified = *slot.block;
    certified.cert.kind = CertKind::Quorum;
    certified.cert.view = view;
    for (const auto& [node, sig] : slot.commits[view]) certified.cert.votes.push_back({node, sig});
    slot.block = std::make_shared<const Block>(std::move(certified));

    deliver_contiguous(now, out);
  }

  void deliver_contiguous(Tick now, Output& out) {
    for (;;) {
      auto it = slots_.find(committed_height_ + 1);
      if (it == slots_.end() || !it->second.committed) break;
      out.committed.push_back(it->second.block);
      last_committed_hash_ = it->second.block->hash();
      ++committed_height_;
      slots_.erase(it);
      note_progress(now);
    }
  }

  void broadcast_view_change(Output& out) {
    ViewChangeMsg vc;
    vc.new_view = target_view_;
    vc.stable_height = stable_height_;
    vc.stable_root = stable_root_;
    for (const auto& [seq, slot] : slots_) {
      if (!slot.pre_prepare) continue;
      for (const auto& [view, votes] : slot.prepares) {
        if (votes.size() >= cfg_.quorum()) {
          vc.prepared.push_back({view, seq, slot.block});
          break;
        }
      }
    }
    vc.node = cfg_.id;
    vc.signature = signer_.sign(node_name(cfg_.id), view_change_digest(vc.new_view));
    ++view_changes_sent_;
    out.broadcast.push_back(vc);
    handle_view_change(vc, deadline_, out);  // count own vote
  }

  void handle_view_change(const ViewChangeMsg& m, Tick now, Output& out) {
    if (m.new_view <= view_) return;
    if (!signer_.verify(node_name(m.node), view_change_digest(m.new_view), m.signature)) return;
    view_change_votes_[m.new_view][m.node] = m;

    // f+1 distinct replicas asking for higher views: join the earliest one.
    if (m.new_view > target_view_) {
      std::map<std::uint64_t, std::set<NodeId>> ahead;
      std::set<NodeId> nodes;
      for (const auto& [v, msgs] : view_change_votes_) {
        if (v <= target_view_) continue;
        for (const auto& [node, _] : msgs) nodes.insert(node);
        ahead[v];
      }
      if (nodes.size() >= cfg_.rules().f() + 1) {
        target_view_ = ahead.begin()->first;
        deadline_ = now + cfg_.view_change_timeout;
        broadcast_view_change(out);
      }
    }

    maybe_emit_new_view(m.new_view, now, out);
  }

  void maybe_emit_new_view(std::uint64_t v, Tick now, Output& out) {
    if (cfg_.leader_of(v) != cfg_.id || v < target_view_ || v <= view_) return;
    if (new_view_sent_.count(v)) return;
    const auto& votes = view_change_votes_[v];
    if (votes.size() < cfg_.quorum()) return;

    NewViewMsg nv;
    nv.view = v;
    std::map<std::uint64_t, PreparedProof> best;  // seq -> highest-view prepared proof
    for (const auto& [node, vote] : votes) {
      nv.voters.push_back(node);
      nv.voter_sigs.push_back(vote.signature);
      for (const auto& p : vote.prepared) {
        auto it = best.find(p.seq);
        if (it == best.end() || p.view > it->second.view) best[p.seq] = p;
      }
    }
    for (auto& [seq, proof] : best)
      if (seq > committed_height_) nv.reproposals.push_back(proof);
    nv.leader = cfg_.id;
    nv.signature = signer_.sign(node_name(cfg_.id), view_change_digest(v));
    new_view_sent_.insert(v);
    out.broadcast.push_back(nv);
    adopt_new_view(nv, now, out);
  }

  void handle_new_view(const NewViewMsg& m, Tick now, Output& out) {
    if (m.view <= view_) return;
    if (m.leader != cfg_.leader_of(m.view)) return;
    if (!signer_.verify(node_name(m.leader), view_change_digest(m.view), m.signature)) return;
    std::set<NodeId> distinct;
    for (size_t i = 0; i < m.voters.size() && i < m.voter_sigs.size(); ++i) {
      if (signer_.verify(node_name(m.voters[i]), view_change_digest(m.view), m.voter_sigs[i]))
        distinct.insert(m.voters[i]);
    }
    if (distinct.size() < cfg_.quorum()) return;
    adopt_new_view(m, now, out);
  }

  void adopt_new_view(const NewViewMsg& m, Tick now, Output& out) {
    view_ = m.view;
    if (target_view_ < view_) target_view_ = view_;
    deadline_ = now + cfg_.view_change_timeout;
    view_change_votes_.erase(view_change_votes_.begin(),
                             view_change_votes_.upper_bound(view_));

    // Uncommitted slots belong to abandoned views; whatever was prepared
    // somewhere comes back through the re-proposals below. Out-of-order
    // committed slots keep their certificates.
    for (auto it = slots_.begin(); it != slots_.end();) {
      if (!it->second.committed)
        it = slots_.erase(it);
      else
        ++it;
    }

    // Prepared-but-uncommitted proposals re-run at the same heights.
    for (const auto& p : m.reproposals) {
      if (p.seq <= committed_height_) continue;
      PrePrepare pp;
      pp.view = view_;
      pp.seq = p.seq;
      pp.block = p.block;
      pp.leader = m.leader;
      pp.signature = sign_as(m.leader, kPhasePrePrepare, view_, p.seq, p.block->hash());
      handle_pre_prepare(pp, now, out);
    }
    flush_buffered(now, out);
  }

  void record_checkpoint(const CheckpointMsg& m) {
    if (m.height <= stable_height_) return;
    if (!signer_.verify(node_name(m.node),
                        vote_digest(0, m.height, m.state_root, kPhaseCheckpoint), m.signature))
      return;
    auto& votes = checkpoint_votes_[m.height];
    votes.insert(m.node);
    if (votes.size() >= cfg_.quorum()) {
      stable_height_ = m.height;
      stable_root_ = m.state_root;
      checkpoint_votes_.erase(checkpoint_votes_.begin(),
                              checkpoint_votes_.upper_bound(m.height));
    }
  }

  void note_progress(Tick now) { deadline_ = now + cfg_.view_change_timeout; }

  void maybe_buffer(Message m) {
    if (!cfg_.buffer_future_view) return;
    if (buffered_.size() < 4096) buffered_.push_back(std::move(m));
  }

  void flush_buffered(Tick now, Output& out) {
    if (buffered_.empty()) return;
    auto pending = std::move(buffered_);
    buffered_.clear();
    for (const auto& m : pending)
      std::visit([&](const auto& msg) { dispatch(msg, now, out); }, m);
  }

  VoteMsg make_vote(std::uint8_t phase, std::uint64_t view, std::uint64_t seq,
                    const Digest& block_hash) {
    VoteMsg v;
    v.phase = phase;
    v.view = view;
    v.seq = seq;
    v.block_hash = block_hash;
    v.node = cfg_.id;
    v.signature = sign_as(cfg_.id, phase, view, seq, block_hash);
    return v;
  }

  Digest sign_as(NodeId node, std::uint8_t phase, std::uint64_t view, std::uint64_t seq,
                 const Digest& block_hash) const {
    return signer_.sign(node_name(node), vote_digest(view, seq, block_hash, phase));
  }

  bool verify_as(NodeId node, std::uint8_t phase, std::uint64_t view, std::uint64_t seq,
                 const Digest& block_hash, const Digest& sig) const {
    return signer_.verify(node_name(node), vote_digest(view, seq, block_hash, phase), sig);
  }

  Config cfg_;
  const Signer& signer_;

  std::uint64_t view_ = 0;
  std::uint64_t target_view_ = 0;
  Height committed_height_ = 0;
  Digest last_committed_hash_;
  std::map<std::uint64_t, Slot> slots_;
  std::map<std::uint64_t, std::map<NodeId, ViewChangeMsg>> view_change_votes_;
  std::set<std::uint64_t> new_view_sent_;
  std::map<Height, std::set<NodeId>> checkpoint_votes_;
  Height stable_height_ = 0;
  Digest stable_root_;
  Tick deadline_ = 0;
  std::uint64_t view_changes_sent_ = 0;
  std::vector<Message> buffered_;
};

// Quorum certificate check for appended blocks: a valid commit-vote set from
// distinct replicas of the expected size.
inline bool verify_quorum_cert(const Block& b, std::uint32_t n,
                               const Signer& signer = default_signer()) {
  if (b.cert.kind != CertKind::Quorum) return false;
  const QuorumRules rules{n};
  std::set<NodeId> distinct;
  const Digest h = b.hash();
  for (const auto& v : b.cert.votes) {
    if (v.node >= n) return false;
    if (!signer.verify(node_name(v.node),
                       vote_digest(b.cert.view, b.header.height, h, kPhaseCommit), v.signature))
      return false;
    distinct.insert(v.node);
  }
  return distinct.size() >= rules.quorum();
}

}  // namespace blocksim::pbft
