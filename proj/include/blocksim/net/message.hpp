#pragma once

#include <memory>
#include <string>
#include <vector>

#include "blocksim/block.hpp"
#include "blocksim/consensus/pbft.hpp"

namespace blocksim::net {

enum class MsgKind : std::uint8_t {
  Submit,        // client transaction submission
  BlockAnnounce,
  SyncRequest,
  SyncBlocks,
  PbftPrePrepare,
  PbftPrepare,
  PbftCommit,
  PbftCheckpoint,
  PbftViewChange,
  PbftNewView,
};

inline const char* to_string(MsgKind k) {
  switch (k) {
    case MsgKind::Submit: return "submit";
    case MsgKind::BlockAnnounce: return "block";
    case MsgKind::SyncRequest: return "sync-req";
    case MsgKind::SyncBlocks: return "sync-resp";
    case MsgKind::PbftPrePrepare: return "pre-prepare";
    case MsgKind::PbftPrepare: return "prepare";
    case MsgKind::PbftCommit: return "commit";
    case MsgKind::PbftCheckpoint: return "checkpoint";
    case MsgKind::PbftViewChange: return "view-change";
    default: return "new-view";
  }
}

// Consensus traffic rides the dedicated queue in segregated mode; submissions
// always go through the bounded shared queue.
inline bool is_consensus(MsgKind k) { return k != MsgKind::Submit; }

// Endpoints: nodes are 0..N-1, clients are encoded negative.
using Endpoint = std::int32_t;

inline Endpoint node_endpoint(NodeId id) { return static_cast<Endpoint>(id); }
inline Endpoint client_endpoint(std::uint32_t client) { return -1 - static_cast<Endpoint>(client); }
inline bool is_node(Endpoint e) { return e >= 0; }

inline std::string endpoint_name(Endpoint e) {
  return e >= 0 ? "n" + std::to_string(e) : "c" + std::to_string(-1 - e);
}

struct Message {
  MsgKind kind = MsgKind::Submit;
  Endpoint src = 0;
  NodeId dst = 0;
  bool corrupted = false;  // set in flight; receivers see a failed integrity check

  TxnPtr txn;                                    // Submit
  BlockPtr block;                                // BlockAnnounce
  std::vector<BlockPtr> blocks;                  // SyncBlocks
  Digest want;                                   // SyncRequest
  std::shared_ptr<const pbft::Message> pbft;     // Pbft*
};

inline MsgKind pbft_msg_kind(const pbft::Message& m) {
  if (std::holds_alternative<pbft::PrePrepare>(m)) return MsgKind::PbftPrePrepare;
  if (std::holds_alternative<pbft::VoteMsg>(m))
    return std::get<pbft::VoteMsg>(m).phase == pbft::kPhasePrepare ? MsgKind::PbftPrepare
                                                                   : MsgKind::PbftCommit;
  if (std::holds_alternative<pbft::CheckpointMsg>(m)) return MsgKind::PbftCheckpoint;
  if (std::holds_alternative<pbft::ViewChangeMsg>(m)) return MsgKind::PbftViewChange;
  return MsgKind::PbftNewView;
}

}  // namespace blocksim::net
