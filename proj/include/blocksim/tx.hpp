#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "blocksim/codec.hpp"
#include "blocksim/common.hpp"
#include "blocksim/digest.hpp"
#include "blocksim/signer.hpp"

namespace blocksim {

struct Transaction {
  Digest txn_id;            // hash of the canonical payload below
  std::string sender;
  std::string contract;
  std::string method;
  std::vector<Value> args;
  Digest signature;         // over txn_id, under the sender's key
  Tick submit_time = 0;

  // Canonical payload: everything except txn_id and signature.
  Digest payload_digest() const {
    ByteWriter w;
    w.str(sender);
    w.str(contract);
    w.str(method);
    w.u32(static_cast<std::uint32_t>(args.size()));
    for (const auto& a : args) encode_value(w, a);
    w.u64(submit_time);
    return sha256(w.data());
  }

  static Transaction make(std::string sender, std::string contract, std::string method,
                          std::vector<Value> args, Tick submit_time,
                          const Signer& signer = default_signer()) {
    Transaction t;
    t.sender = std::move(sender);
    t.contract = std::move(contract);
    t.method = std::move(method);
    t.args = std::move(args);
    t.submit_time = submit_time;
    t.txn_id = t.payload_digest();
    t.signature = signer.sign(t.sender, t.txn_id);
    return t;
  }

  bool verify(const Signer& signer = default_signer()) const {
    return txn_id == payload_digest() && signer.verify(sender, txn_id, signature);
  }

  void encode(ByteWriter& w) const {
    w.digest(txn_id);
    w.str(sender);
    w.str(contract);
    w.str(method);
    w.u32(static_cast<std::uint32_t>(args.size()));
    for (const auto& a : args) encode_value(w, a);
    w.digest(signature);
    w.u64(submit_time);
  }

  static Transaction decode(ByteReader& r) {
    Transaction t;
    t.txn_id = r.digest();
    t.sender = r.str();
    t.contract = r.str();
    t.method = r.str();
    const auto n = r.u32();
    t.args.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) t.args.push_back(decode_value(r));
    t.signature = r.digest();
    t.submit_time = r.u64();
    return t;
  }
};

using TxnPtr = std::shared_ptr<const Transaction>;

// Binary Merkle root over txn ids in block order. Odd nodes are promoted
// unpaired; an empty list commits to the zero digest.
inline Digest txn_merkle_root(std::span<const TxnPtr> txns) {
  if (txns.empty()) return Digest::zero();
  std::vector<Digest> level;
  level.reserve(txns.size());
  for (const auto& t : txns) level.push_back(t->txn_id);
  while (level.size() > 1) {
    std::vector<Digest> next;
    next.reserve((level.size() + 1) / 2);
    for (size_t i = 0; i + 1 < level.size(); i += 2)
      next.push_back(sha256_pair(level[i], level[i + 1]));
    if (level.size() % 2 == 1) next.push_back(level.back());
    level = std::move(next);
  }
  return level[0];
}

}  // namespace blocksim
