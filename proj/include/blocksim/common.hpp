#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace blocksim {

// Simulation time. One tick models one millisecond.
using Tick = std::uint64_t;
using Height = std::uint64_t;
using NodeId = std::uint32_t;

constexpr Tick kTicksPerSecond = 1000;

inline Tick seconds(std::uint64_t s) { return s * kTicksPerSecond; }

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CodecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two conflicting certified blocks at one height. Signals a consensus bug,
// never an expected runtime condition.
struct SafetyViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StaleCommitError : std::logic_error {
  using std::logic_error::logic_error;
};

struct UnknownKeyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownBlockError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace blocksim
