#pragma once

#include <string>
#include <vector>

#include "blocksim/chain.hpp"
#include "blocksim/consensus/puzzle.hpp"

namespace blocksim {

enum class Engine : std::uint8_t { PoW, PoS, PoA, Pbft, CentralSequencer };

inline const char* to_string(Engine e) {
  switch (e) {
    case Engine::PoW: return "pow";
    case Engine::PoS: return "pos";
    case Engine::PoA: return "poa";
    case Engine::Pbft: return "pbft";
    default: return "sequencer";
  }
}

inline Engine engine_from_string(const std::string& s) {
  if (s == "pow") return Engine::PoW;
  if (s == "pos") return Engine::PoS;
  if (s == "poa") return Engine::PoA;
  if (s == "pbft") return Engine::Pbft;
  if (s == "sequencer") return Engine::CentralSequencer;
  throw ConfigError("unknown consensus engine: " + s);
}

enum class StakeFunction : std::uint8_t { Nxt, Balance };

struct ConsensusConfig {
  Engine engine = Engine::Pbft;
  u256 difficulty_t = 0;                 // 0 = derive from block_interval
  Tick block_interval = 2500;            // expected work/stake block spacing
  std::uint32_t batch_size = 500;
  Tick batch_timeout = 1000;             // propose a partial batch after this
  Tick step_duration = 1000;             // authority slot width
  Tick view_change_timeout = 0;          // 0 = 20x estimated block interval
  std::uint32_t checkpoint_interval = 10;
  std::uint32_t confirmation_depth = 5;  // work/authority confirmation depth
  std::vector<NodeId> authorities;       // authority round-robin / sequencer[0]
  StakeTable stake;
  StakeFunction stake_function = StakeFunction::Nxt;
  bool buffer_future_view = false;       // hold wrong-view votes instead of dropping

  bool finalized() const { return engine == Engine::Pbft || engine == Engine::CentralSequencer; }

  ForkChoiceMode fork_mode() const {
    return finalized() ? ForkChoiceMode::Finalized : ForkChoiceMode::LongestChain;
  }
};

// Quorum arithmetic. f is the Byzantine tolerance floor((n-1)/3); quorums are
// n - f votes, which reduces to the familiar 2f+1 when n = 3f+1.
struct QuorumRules {
  std::uint32_t n = 0;

  std::uint32_t f() const { return (n - 1) / 3; }
  std::uint32_t quorum() const { return n - f(); }
  bool valid() const { return n >= 1 && n >= 3 * f() + 1; }
};

// Round-robin slot assignment over the authority list.
inline NodeId poa_proposer(Tick slot_time, const std::vector<NodeId>& authorities,
                           Tick step_duration) {
  if (authorities.empty()) throw ConfigError("authority list is empty");
  if (step_duration == 0) throw ConfigError("step duration must be positive");
  return authorities[(slot_time / step_duration) % authorities.size()];
}

}  // namespace blocksim
