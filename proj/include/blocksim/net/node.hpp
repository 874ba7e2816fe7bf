#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <unordered_map>
#include <unordered_set>

#include "blocksim/consensus/config.hpp"
#include "blocksim/consensus/pbft.hpp"
#include "blocksim/contracts/builtin.hpp"
#include "blocksim/net/sim.hpp"

namespace blocksim::net {

struct ExecModel {
  std::uint64_t steps_per_tick = 100'000;  // simulated execution speed
  std::uint64_t step_budget = 100'000'000;
};

// Observer callback: fired by the block creator (work/stake/authority mints)
// and by every replica on local commit (finalized engines). `committed` marks
// quorum-final blocks.
using BlockHook = std::function<void(NodeId, const BlockPtr&, Tick, bool committed)>;

// Deterministic preload applied identically on every replica before genesis.
using StatePreload = std::function<void(ContractRuntime&, StateStore&)>;

class NetCtx {
 public:
  NetCtx(SimNetwork& net, Endpoint self) : net_(net), self_(self) {}

  Tick now() const { return net_.now(); }
  std::uint32_t num_nodes() const { return net_.num_nodes(); }

  void send(NodeId dst, Message msg) { net_.send(self_, dst, std::move(msg)); }

  void broadcast(const Message& msg, bool include_self = false) {
    for (NodeId n = 0; n < net_.num_nodes(); ++n) {
      if (!include_self && is_node(self_) && n == static_cast<NodeId>(self_)) continue;
      net_.send(self_, n, msg);
    }
  }

 private:
  SimNetwork& net_;
  Endpoint self_;
};

enum class ByzantineBehavior : std::uint8_t { None, EquivocateLeader, WithholdVotes };

struct NodeConfig {
  NodeId id = 0;
  std::uint32_t num_nodes = 1;
  ConsensusConfig consensus;
  ExecModel exec;
  std::uint32_t num_buckets = 1024;
  std::uint64_t seed = 0;
  ByzantineBehavior byzantine = ByzantineBehavior::None;
};

class BaseNode {
 public:
  BaseNode(NodeConfig cfg, BlockPtr genesis, StatePreload preload, BlockHook hook)
      : cfg_(std::move(cfg)), preload_(std::move(preload)), hook_(std::move(hook)),
        store_(cfg_.num_buckets), runtime_(store_, cfg_.exec.step_budget),
        chain_(genesis, cfg_.consensus.fork_mode(), cfg_.consensus.confirmation_depth,
               [this](const Block& b) { return verify_block(b); }),
        rng_(derive_seed(cfg_.seed, "node", cfg_.id)), mempool_cap_(cfg_.consensus.batch_size * 10) {
    register_builtin_contracts(runtime_);
    if (preload_) preload_(runtime_, store_);
    exec_branch_.push_back(genesis->hash());
  }

  virtual ~BaseNode() = default;

  NodeId id() const { return cfg_.id; }
  const ChainView& chain() const { return chain_; }
  StateStore& store() { return store_; }
  const StateStore& store() const { return store_; }
  ContractRuntime& runtime() { return runtime_; }
  bool busy(Tick now) const { return now < busy_until_; }
  std::uint64_t rejected_invalid() const { return rejected_invalid_; }
  size_t mempool_size() const { return mempool_ids_.size(); }

  virtual std::uint64_t view_changes() const { return 0; }

  void handle(Message&& msg, NetCtx& ctx) {
    switch (msg.kind) {
      case MsgKind::Submit:
        handle_submit(std::move(msg), ctx);
        break;
      case MsgKind::BlockAnnounce:
        handle_announce(std::move(msg), ctx);
        break;
      case MsgKind::SyncRequest:
        handle_sync_request(std::move(msg), ctx);
        break;
      case MsgKind::SyncBlocks:
        handle_sync_blocks(std::move(msg), ctx);
        break;
      default:
        on_engine_message(std::move(msg), ctx);
        break;
    }
  }

  void tick(NetCtx& ctx) { on_engine_tick(ctx); }

  // Partition heal / restart aid: offer the current tip to everyone so
  // stragglers can pull missing ancestors.
  void announce_tip(NetCtx& ctx) {
    if (chain_.tip_height() == 0) return;
    Message m;
    m.kind = MsgKind::BlockAnnounce;
    m.block = chain_.tip();
    ctx.broadcast(m);
  }

 protected:
  virtual bool verify_block(const Block& b) = 0;
  virtual bool finalized() const { return cfg_.consensus.finalized(); }
  virtual void on_engine_message(Message&&, NetCtx&) {}
  virtual void on_engine_tick(NetCtx&) {}
  virtual void on_chain_extended(NetCtx&) {}

  void handle_submit(Message&& msg, NetCtx&) {
    if (msg.corrupted || !msg.txn->verify()) {
      ++rejected_invalid_;
      return;
    }
    accept_txn(msg.txn);
  }

  // The deque may hold tombstones for committed txns; mempool_ids_ is the
  // live set and removals are O(1), with lazy front compaction.
  void accept_txn(const TxnPtr& txn) {
    if (committed_ids_.count(txn->txn_id) || mempool_ids_.count(txn->txn_id)) return;
    if (mempool_ids_.size() >= mempool_cap_) return;  // admission bound
    mempool_.push_back(txn);
    mempool_ids_.insert(txn->txn_id);
  }

  void compact_mempool() {
    while (!mempool_.empty() && !mempool_ids_.count(mempool_.front()->txn_id))
      mempool_.pop_front();
  }

  bool mempool_empty() const { return mempool_ids_.empty(); }
  size_t mempool_live() const { return mempool_ids_.size(); }

  void handle_announce(Message&& msg, NetCtx& ctx) {
    if (msg.corrupted) {
      ++rejected_invalid_;
      return;
    }
    ingest_block(msg.block, msg.src, ctx);
  }

  void ingest_block(const BlockPtr& b, Endpoint src, NetCtx& ctx) {
    switch (chain_.append(b)) {
      case AppendResult::Appended:
        reconcile_state(ctx);
        if (hook_ && finalized()) hook_(cfg_.id, b, ctx.now(), true);
        on_chain_extended(ctx);
        break;
      case AppendResult::UnknownParent:
        request_sync(b->header.parent_hash, src, ctx);
        break;
      case AppendResult::InvalidCert:
        ++rejected_invalid_;
        break;
      case AppendResult::Duplicate:
        break;
    }
  }

  void request_sync(const Digest& want, Endpoint src, NetCtx& ctx) {
    if (!is_node(src)) return;
    auto it = sync_requested_.find(want);
    if (it != sync_requested_.end() && ctx.now() < it->second + 2000) return;
    sync_requested_[want] = ctx.now();
    Message req;
    req.kind = MsgKind::SyncRequest;
    req.want = want;
    ctx.send(static_cast<NodeId>(src), std::move(req));
  }

  void handle_sync_request(Message&& msg, NetCtx& ctx) {
    if (msg.corrupted) {
      ++rejected_invalid_;
      return;
    }
    const BlockPtr* found = chain_.find(msg.want);
    if (!found) return;
    Message resp;
    resp.kind = MsgKind::SyncBlocks;
    // requested block plus a few ancestors, oldest first
    std::vector<BlockPtr> segment;
    BlockPtr cur = *found;
    for (int i = 0; i < 8; ++i) {
      segment.push_back(cur);
      if (cur->header.height == 0) break;
      const BlockPtr* parent = chain_.find(cur->header.parent_hash);
      if (!parent) break;
      cur = *parent;
    }
    resp.blocks.assign(segment.rbegin(), segment.rend());
    if (is_node(msg.src)) ctx.send(static_cast<NodeId>(msg.src), std::move(resp));
  }

  void handle_sync_blocks(Message&& msg, NetCtx& ctx) {
    if (msg.corrupted) {
      ++rejected_invalid_;
      return;
    }
    for (const auto& b : msg.blocks) {
      if (b->header.height == 0) continue;
      ingest_block(b, msg.src, ctx);
    }
  }

  // Mint path for engines that create blocks locally.
  BlockPtr build_block(Tick now, std::uint64_t nonce, Certificate cert, Tick timestamp) {
    Block b;
    b.header.height = chain_.tip_height() + 1;
    b.header.parent_hash = chain_.tip_hash();
    b.header.proposer = node_name(cfg_.id);
    b.header.nonce = nonce;
    b.header.state_root = store_.state_root();
    b.header.timestamp = timestamp;
    b.txns = take_batch();
    b.header.txn_root = txn_merkle_root(b.txns);
    b.cert = std::move(cert);
    (void)now;
    return std::make_shared<const Block>(std::move(b));
  }

  std::vector<TxnPtr> take_batch() {
    compact_mempool();
    std::vector<TxnPtr> batch;
    const std::uint32_t cap = cfg_.consensus.batch_size;
    for (const auto& t : mempool_) {
      if (batch.size() >= cap) break;
      if (mempool_ids_.count(t->txn_id)) batch.push_back(t);
    }
    return batch;
  }

  void mint(BlockPtr b, NetCtx& ctx) {
    if (chain_.append(b) != AppendResult::Appended) return;
    reconcile_state(ctx);
    if (hook_) hook_(cfg_.id, b, ctx.now(), finalized());
    Message m;
    m.kind = MsgKind::BlockAnnounce;
    m.block = std::move(b);
    ctx.broadcast(m);
    on_chain_extended(ctx);
  }

  // Executes whatever the fork choice now says is main. A pure extension
  // executes just the new blocks; a reorg rebuilds state by replaying the
  // whole branch (replay is not charged as busy time).
  void reconcile_state(NetCtx& ctx) {
    const auto& main = chain_.main_branch();
    const bool extension = main.size() >= exec_branch_.size() &&
                           main[exec_branch_.size() - 1] == exec_branch_.back();
    if (!extension) {
      store_ = StateStore(cfg_.num_buckets);
      runtime_.attach(store_);
      runtime_.reset_deployments();
      if (preload_) preload_(runtime_, store_);
      committed_ids_.clear();
      exec_branch_.assign(main.begin(), main.begin() + 1);
      for (size_t i = 1; i < main.size(); ++i) replay_block(chain_.block(main[i]), false, ctx);
      return;
    }
    for (size_t i = exec_branch_.size(); i < main.size(); ++i)
      replay_block(chain_.block(main[i]), true, ctx);
  }

  void replay_block(const BlockPtr& b, bool charge, NetCtx& ctx) {
    BlockExecResult result = runtime_.execute_block(*b);
    exec_branch_.push_back(b->hash());
    for (const auto& t : b->txns) {
      committed_ids_.insert(t->txn_id);
      mempool_ids_.erase(t->txn_id);
    }
    compact_mempool();
    if (charge && cfg_.exec.steps_per_tick > 0) {
      const Tick cost = result.total_steps / cfg_.exec.steps_per_tick;
      const Tick base = std::max(busy_until_, ctx.now());
      busy_until_ = base + cost;
    }
    on_block_executed(b, ctx);
  }

  virtual void on_block_executed(const BlockPtr&, NetCtx&) {}

  NodeConfig cfg_;
  StatePreload preload_;
  BlockHook hook_;
  StateStore store_;
  ContractRuntime runtime_;
  ChainView chain_;
  Rng rng_;

  std::deque<TxnPtr> mempool_;
  std::unordered_set<Digest, DigestHash> mempool_ids_;
  std::unordered_set<Digest, DigestHash> committed_ids_;
  size_t mempool_cap_;
  std::vector<Digest> exec_branch_;  // executed prefix of the main branch
  std::unordered_map<Digest, Tick, DigestHash> sync_requested_;
  Tick busy_until_ = 0;
  std::uint64_t rejected_invalid_ = 0;
};

// Work-puzzle miner: one nonce candidate per tick against the current
// template; difficulty t sets the expected interval 2^256 / (t * miners).
class PowNode : public BaseNode {
 public:
  PowNode(NodeConfig cfg, BlockPtr genesis, StatePreload preload, BlockHook hook)
      : BaseNode(std::move(cfg), std::move(genesis), std::move(preload), std::move(hook)),
        threshold_(cfg_.consensus.difficulty_t) {}

 protected:
  bool verify_block(const Block& b) override {
    if (b.cert.kind != CertKind::Work) return false;
    if (b.txns.size() > cfg_.consensus.batch_size) return false;
    if (txn_merkle_root(b.txns) != b.header.txn_root) return false;
    return pow_verify(b.header, threshold_);
  }

  void on_engine_tick(NetCtx& ctx) override {
    refresh_template(ctx.now());
    const std::uint64_t nonce = rng_.next_u64();
    if (!pow_check(template_base_, nonce, threshold_)) return;
    BlockHeader h = template_header_;
    h.nonce = nonce;
    Block b;
    b.header = h;
    b.txns = template_txns_;
    b.cert.kind = CertKind::Work;
    template_valid_ = false;
    mint(std::make_shared<const Block>(std::move(b)), ctx);
  }

  void on_chain_extended(NetCtx&) override { template_valid_ = false; }

 private:
  void refresh_template(Tick now) {
    // refresh when the tip moved, or periodically to pick up new txns
    const bool stale = !template_valid_ || template_header_.parent_hash != chain_.tip_hash() ||
                       (template_txns_.size() < cfg_.consensus.batch_size &&
                        template_txns_.size() < mempool_live() && now % 256 == 0);
    if (!stale) return;
    template_txns_ = take_batch();
    template_header_ = BlockHeader{};
    template_header_.height = chain_.tip_height() + 1;
    template_header_.parent_hash = chain_.tip_hash();
    template_header_.proposer = node_name(cfg_.id);
    template_header_.state_root = store_.state_root();
    template_header_.txn_root = txn_merkle_root(template_txns_);
    template_header_.timestamp = now;
    template_base_ = hash_header_base(template_header_);
    template_valid_ = true;
  }

  u256 threshold_;
  BlockHeader template_header_;
  std::vector<TxnPtr> template_txns_;
  Digest template_base_;
  bool template_valid_ = false;
};

// Stake-weighted puzzle: the threshold scales with the configured stake
// function, so high-stake validators win proportionally more slots.
class PosNode : public BaseNode {
 public:
  PosNode(NodeConfig cfg, BlockPtr genesis, StatePreload preload, BlockHook hook)
      : BaseNode(std::move(cfg), std::move(genesis), std::move(preload), std::move(hook)),
        threshold_(cfg_.consensus.difficulty_t) {}

 protected:
  bool verify_block(const Block& b) override {
    if (b.cert.kind != CertKind::Stake) return false;
    if (b.txns.size() > cfg_.consensus.batch_size) return false;
    if (txn_merkle_root(b.txns) != b.header.txn_root) return false;
    const BlockPtr* parent = chain_.find(b.header.parent_hash);
    if (!parent) return false;
    if (!cfg_.consensus.stake.contains(b.header.proposer)) return false;
    return pos_check(b.header, threshold_, stake_value(b.header.proposer, (*parent)->header.timestamp,
                                                       b.header.timestamp));
  }

  void on_engine_tick(NetCtx& ctx) override {
    const Tick now = ctx.now();
    BlockHeader h;
    h.height = chain_.tip_height() + 1;
    h.parent_hash = chain_.tip_hash();
    h.proposer = node_name(cfg_.id);
    h.state_root = store_.state_root();
    auto txns = take_batch();
    h.txn_root = txn_merkle_root(txns);
    h.timestamp = now;
    h.nonce = rng_.next_u64();
    const std::uint64_t s = stake_value(h.proposer, chain_.tip()->header.timestamp, now);
    if (!pos_check(h, threshold_, s)) return;
    Block b;
    b.header = h;
    b.txns = std::move(txns);
    b.cert.kind = CertKind::Stake;
    mint(std::make_shared<const Block>(std::move(b)), ctx);
  }

 private:
  std::uint64_t stake_value(const std::string& proposer, Tick parent_ts, Tick now) const {
    if (cfg_.consensus.stake_function == StakeFunction::Balance)
      return cfg_.consensus.stake.balance(proposer);
    return nxt_stake(proposer, cfg_.consensus.stake, parent_ts, now);
  }

  u256 threshold_;
};

// Authority round-robin: the slot owner emits one block per step, empty slots
// included, and honest nodes reject blocks signed outside their slot.
class PoaNode : public BaseNode {
 public:
  PoaNode(NodeConfig cfg, BlockPtr genesis, StatePreload preload, BlockHook hook)
      : BaseNode(std::move(cfg), std::move(genesis), std::move(preload), std::move(hook)) {}

 protected:
  bool verify_block(const Block& b) override {
    if (b.cert.kind != CertKind::Authority || b.cert.votes.size() != 1) return false;
    if (b.txns.size() > cfg_.consensus.batch_size) return false;
    if (txn_merkle_root(b.txns) != b.header.txn_root) return false;
    const NodeId expected = poa_proposer(b.header.timestamp, cfg_.consensus.authorities,
                                         cfg_.consensus.step_duration);
    const Vote& v = b.cert.votes[0];
    if (v.node != expected || b.header.proposer != node_name(expected)) return false;
    return default_signer().verify(node_name(v.node), b.hash(), v.signature);
  }

  void on_engine_tick(NetCtx& ctx) override {
    const Tick now = ctx.now();
    const Tick slot = now / cfg_.consensus.step_duration;
    if (slot == last_slot_) return;
    last_slot_ = slot;
    if (poa_proposer(now, cfg_.consensus.authorities, cfg_.consensus.step_duration) != cfg_.id)
      return;
    Block b;
    b.header.height = chain_.tip_height() + 1;
    b.header.parent_hash = chain_.tip_hash();
    b.header.proposer = node_name(cfg_.id);
    b.header.state_root = store_.state_root();
    b.txns = take_batch();
    b.header.txn_root = txn_merkle_root(b.txns);
    b.header.timestamp = slot * cfg_.consensus.step_duration;
    b.cert.kind = CertKind::Authority;
    const Digest h = hash_header(b.header);
    b.cert.votes.push_back({cfg_.id, default_signer().sign(node_name(cfg_.id), h)});
    mint(std::make_shared<const Block>(std::move(b)), ctx);
  }

 private:
  Tick last_slot_ = std::uint64_t(-1);
};

// Replicated three-phase consensus; blocks become final on commit quorum and
// carry the commit-vote certificate.
class PbftNode : public BaseNode {
 public:
  PbftNode(NodeConfig cfg, BlockPtr genesis, StatePreload preload, BlockHook hook)
      : BaseNode(std::move(cfg), std::move(genesis), std::move(preload), std::move(hook)),
        replica_(make_replica_config(cfg_), genesis_hash()) {}

  std::uint64_t view_changes() const override { return replica_.view_changes_sent(); }
  const pbft::Replica& replica() const { return replica_; }

 protected:
  bool verify_block(const Block& b) override {
    if (b.txns.size() > cfg_.consensus.batch_size) return false;
    if (txn_merkle_root(b.txns) != b.header.txn_root) return false;
    return pbft::verify_quorum_cert(b, cfg_.num_nodes);
  }

  void on_engine_message(Message&& msg, NetCtx& ctx) override {
    if (msg.corrupted || !msg.pbft) {
      ++rejected_invalid_;
      return;
    }
    process_output(replica_.on_message(*msg.pbft, ctx.now()), ctx);
  }

  void on_engine_tick(NetCtx& ctx) override {
    const Tick now = ctx.now();
    if (batch_deadline_ == 0) batch_deadline_ = now + cfg_.consensus.batch_timeout;
    const bool pending = !mempool_empty() || replica_.committed_height() < proposed_upto_;
    process_output(replica_.on_tick(now, pending), ctx);

    if (replica_.ready_to_propose() && !mempool_empty() &&
        (mempool_live() >= cfg_.consensus.batch_size || now >= batch_deadline_)) {
      propose(ctx);
    }
  }

 private:
  pbft::Config make_replica_config(const NodeConfig& cfg) const {
    pbft::Config pc;
    pc.id = cfg.id;
    pc.n = cfg.num_nodes;
    pc.view_change_timeout = cfg.consensus.view_change_timeout;
    pc.checkpoint_interval = cfg.consensus.checkpoint_interval;
    pc.buffer_future_view = cfg.consensus.buffer_future_view;
    return pc;
  }

  Digest genesis_hash() const { return chain_.genesis_hash(); }

  void propose(NetCtx& ctx) {
    const Tick now = ctx.now();
    Block b;
    b.header.height = replica_.committed_height() + 1;
    b.header.parent_hash = replica_.committed_hash();
    b.header.proposer = node_name(cfg_.id);
    b.header.state_root = store_.state_root();
    b.txns = take_batch();
    b.header.txn_root = txn_merkle_root(b.txns);
    b.header.timestamp = now;
    auto proposal = std::make_shared<const Block>(std::move(b));

    if (cfg_.byzantine == ByzantineBehavior::EquivocateLeader) {
      propose_equivocating(proposal, ctx);
      return;
    }
    proposed_upto_ = std::max<Height>(proposed_upto_, proposal->header.height);
    batch_deadline_ = now + cfg_.consensus.batch_timeout;
    process_output(replica_.propose(proposal, now), ctx);
  }

  // Byzantine leader: conflicting proposals for one (view, seq), split across
  // the replica set. At most one can ever gather a commit quorum.
  void propose_equivocating(const BlockPtr& block_a, NetCtx& ctx) {
    const Tick now = ctx.now();
    Block alt = *block_a;
    alt.header.timestamp = now + 1;  // different content, same slot
    auto block_b = std::make_shared<const Block>(std::move(alt));

    auto make_pp = [&](const BlockPtr& blk) {
      pbft::PrePrepare pp;
      pp.view = replica_.view();
      pp.seq = blk->header.height;
      pp.block = blk;
      pp.leader = cfg_.id;
      pp.signature = default_signer().sign(
          node_name(cfg_.id),
          vote_digest(pp.view, pp.seq, blk->hash(), pbft::kPhasePrePrepare));
      return pp;
    };
    const pbft::PrePrepare pp_a = make_pp(block_a);
    const pbft::PrePrepare pp_b = make_pp(block_b);
    proposed_upto_ = std::max<Height>(proposed_upto_, block_a->header.height);
    batch_deadline_ = now + cfg_.consensus.batch_timeout;
    for (NodeId n = 0; n < cfg_.num_nodes; ++n) {
      if (n == cfg_.id) continue;
      Message m;
      m.pbft = std::make_shared<const pbft::Message>(n % 2 == 0 ? pbft::Message(pp_a)
                                                                : pbft::Message(pp_b));
      m.kind = MsgKind::PbftPrePrepare;
      ctx.send(n, std::move(m));
    }
    process_output(replica_.on_message(pbft::Message(pp_a), now), ctx);
  }

  void process_output(pbft::Output&& out, NetCtx& ctx) {
    for (auto& m : out.broadcast) {
      const MsgKind kind = pbft_msg_kind(m);
      if (cfg_.byzantine == ByzantineBehavior::WithholdVotes &&
          (kind == MsgKind::PbftPrepare || kind == MsgKind::PbftCommit))
        continue;
      Message wire;
      wire.kind = kind;
      wire.pbft = std::make_shared<const pbft::Message>(std::move(m));
      ctx.broadcast(wire);
    }
    for (const auto& b : out.committed) commit_block(b, ctx);
  }

  void commit_block(const BlockPtr& b, NetCtx& ctx) {
    const auto res = chain_.append(b);
    if (res != AppendResult::Appended && res != AppendResult::Duplicate) {
      ++rejected_invalid_;
      return;
    }
    if (res == AppendResult::Appended) {
      reconcile_state(ctx);
      if (hook_) hook_(cfg_.id, b, ctx.now(), true);
      Message m;
      m.kind = MsgKind::BlockAnnounce;
      m.block = b;
      ctx.broadcast(m);
    }
    batch_deadline_ = ctx.now() + cfg_.consensus.batch_timeout;
  }

  void on_chain_extended(NetCtx& ctx) override {
    // Certified blocks arrived by announce/sync: move the replica forward.
    replica_.fast_forward(chain_.tip_height(), chain_.tip_hash(), ctx.now());
  }

  void on_block_executed(const BlockPtr& b, NetCtx& ctx) override {
    auto out = replica_.note_executed(b->header.height, store_.state_root());
    process_output(std::move(out), ctx);
  }

  pbft::Replica replica_;
  Tick batch_deadline_ = 0;
  Height proposed_upto_ = 0;
};

// Central ordering service: one trusted sequencer assigns the total order.
// Crash-stop only; a corrupt sequencer can violate safety by construction.
class SequencerNode : public BaseNode {
 public:
  SequencerNode(NodeConfig cfg, BlockPtr genesis, StatePreload preload, BlockHook hook)
      : BaseNode(std::move(cfg), std::move(genesis), std::move(preload), std::move(hook)) {}

 protected:
  bool verify_block(const Block& b) override {
    if (b.cert.kind != CertKind::Sequencer || b.cert.votes.size() != 1) return false;
    if (b.txns.size() > cfg_.consensus.batch_size) return false;
    if (txn_merkle_root(b.txns) != b.header.txn_root) return false;
    const NodeId seq = sequencer_id();
    const Vote& v = b.cert.votes[0];
    if (v.node != seq) return false;
    return default_signer().verify(node_name(seq), b.hash(), v.signature);
  }

  void on_engine_tick(NetCtx& ctx) override {
    if (cfg_.id != sequencer_id()) return;
    const Tick now = ctx.now();
    if (batch_deadline_ == 0) batch_deadline_ = now + cfg_.consensus.batch_timeout;
    if (mempool_empty()) return;
    if (mempool_live() < cfg_.consensus.batch_size && now < batch_deadline_) return;
    Block b;
    b.header.height = chain_.tip_height() + 1;
    b.header.parent_hash = chain_.tip_hash();
    b.header.proposer = node_name(cfg_.id);
    b.header.state_root = store_.state_root();
    b.txns = take_batch();
    b.header.txn_root = txn_merkle_root(b.txns);
    b.header.timestamp = now;
    b.cert.kind = CertKind::Sequencer;
    const Digest h = hash_header(b.header);
    b.cert.votes.push_back({cfg_.id, default_signer().sign(node_name(cfg_.id), h)});
    batch_deadline_ = now + cfg_.consensus.batch_timeout;
    mint(std::make_shared<const Block>(std::move(b)), ctx);
  }

 private:
  NodeId sequencer_id() const {
    return cfg_.consensus.authorities.empty() ? 0 : cfg_.consensus.authorities[0];
  }

  Tick batch_deadline_ = 0;
};

inline std::unique_ptr<BaseNode> make_node(const NodeConfig& cfg, BlockPtr genesis,
                                           StatePreload preload, BlockHook hook) {
  switch (cfg.consensus.engine) {
    case Engine::PoW:
      return std::make_unique<PowNode>(cfg, std::move(genesis), std::move(preload),
                                       std::move(hook));
    case Engine::PoS:
      return std::make_unique<PosNode>(cfg, std::move(genesis), std::move(preload),
                                       std::move(hook));
    case Engine::PoA:
      return std::make_unique<PoaNode>(cfg, std::move(genesis), std::move(preload),
                                       std::move(hook));
    case Engine::Pbft:
      return std::make_unique<PbftNode>(cfg, std::move(genesis), std::move(preload),
                                        std::move(hook));
    default:
      return std::make_unique<SequencerNode>(cfg, std::move(genesis), std::move(preload),
                                             std::move(hook));
  }
}

}  // namespace blocksim::net
