#pragma once

#include <memory>
#include <string>
#include <vector>

#include "blocksim/tx.hpp"

namespace blocksim {

struct BlockHeader {
  Height height = 0;
  Digest parent_hash;       // all-zero only for genesis
  std::string proposer;
  std::uint64_t nonce = 0;  // puzzle solution for work/stake engines
  Digest state_root;        // root of the state this block executes on top of
                            // (the parent's post-execution state)
  Digest txn_root;
  Tick timestamp = 0;
};

inline void encode_header(ByteWriter& w, const BlockHeader& h) {
  w.u64(h.height);
  w.digest(h.parent_hash);
  w.str(h.proposer);
  w.u64(h.nonce);
  w.digest(h.state_root);
  w.digest(h.txn_root);
  w.u64(h.timestamp);
}

inline BlockHeader decode_header(ByteReader& r) {
  BlockHeader h;
  h.height = r.u64();
  h.parent_hash = r.digest();
  h.proposer = r.str();
  h.nonce = r.u64();
  h.state_root = r.digest();
  h.txn_root = r.digest();
  h.timestamp = r.u64();
  return h;
}

inline Digest hash_header(const BlockHeader& h) {
  ByteWriter w;
  encode_header(w, h);
  return sha256(w.data());
}

// Header commitment with the nonce left out: the puzzle's block-content hash.
inline Digest hash_header_base(const BlockHeader& h) {
  ByteWriter w;
  w.u64(h.height);
  w.digest(h.parent_hash);
  w.str(h.proposer);
  w.digest(h.state_root);
  w.digest(h.txn_root);
  w.u64(h.timestamp);
  return sha256(w.data());
}

enum class CertKind : std::uint8_t {
  None = 0,       // genesis
  Work = 1,       // nonce in the header is the whole certificate
  Stake = 2,
  Authority = 3,  // slot proposer's signature
  Quorum = 4,     // commit vote set
  Sequencer = 5,  // sequencer's signature
};

struct Vote {
  NodeId node = 0;
  Digest signature;
};

struct Certificate {
  CertKind kind = CertKind::None;
  std::uint64_t view = 0;  // consensus round the votes were cast in
  std::vector<Vote> votes;
};

inline void encode_cert(ByteWriter& w, const Certificate& c) {
  w.u8(static_cast<std::uint8_t>(c.kind));
  w.u64(c.view);
  w.u32(static_cast<std::uint32_t>(c.votes.size()));
  for (const auto& v : c.votes) {
    w.u32(v.node);
    w.digest(v.signature);
  }
}

inline Certificate decode_cert(ByteReader& r) {
  Certificate c;
  c.kind = static_cast<CertKind>(r.u8());
  c.view = r.u64();
  const auto n = r.u32();
  c.votes.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Vote v;
    v.node = r.u32();
    v.signature = r.digest();
    c.votes.push_back(v);
  }
  return c;
}

struct Block {
  BlockHeader header;
  std::vector<TxnPtr> txns;
  Certificate cert;

  Digest hash() const { return hash_header(header); }

  void encode(ByteWriter& w) const {
    encode_header(w, header);
    w.u32(static_cast<std::uint32_t>(txns.size()));
    for (const auto& t : txns) t->encode(w);
    encode_cert(w, cert);
  }

  static Block decode(ByteReader& r) {
    Block b;
    b.header = decode_header(r);
    const auto n = r.u32();
    b.txns.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i)
      b.txns.push_back(std::make_shared<const Transaction>(Transaction::decode(r)));
    b.cert = decode_cert(r);
    return b;
  }
};

using BlockPtr = std::shared_ptr<const Block>;

// Identity string used when nodes sign. Node ids are dense, names are not.
inline std::string node_name(NodeId id) { return "n" + std::to_string(id); }

// Vote payload for quorum certificates: one digest per (view, height, block).
inline Digest vote_digest(std::uint64_t view, Height height, const Digest& block_hash,
                          std::uint8_t phase) {
  ByteWriter w;
  w.u8(phase);
  w.u64(view);
  w.u64(height);
  w.digest(block_hash);
  return sha256(w.data());
}

}  // namespace blocksim
