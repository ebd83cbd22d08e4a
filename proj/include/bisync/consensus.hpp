#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bisync/link.hpp"
#include "bisync/timing.hpp"

namespace bisync::consensus {

enum class Primitive { RWRegister, SwapRegister };

struct Decision {
    int value = -1;
    std::uint64_t slot = 0;  // 1-based decision slot
};

struct SweepEntry {
    link::FaultSpec fault;
    std::optional<Decision> decision_a, decision_b;
    int aborted_slots = 0;
    bool agreement = false;
    bool validity = false;
    bool within_bound = false;  // decision slot <= 1 + faulted slots

    std::string to_line() const;
};

struct SwapConsensusReport {
    std::pair<int, int> inputs;
    std::vector<SweepEntry> entries;
    bool all_ok = true;
};

// Swap consensus over the link: both processes offer their input each slot;
// a committed slot decides the lower process id's value, an aborted slot
// retries, and a survivor decides its own input on definitive silence.
SwapConsensusReport run_swap_consensus(std::pair<int, int> inputs,
                                       const std::vector<link::FaultSpec>& sweep,
                                       std::uint64_t max_slots = 8);

struct AttackReport {
    std::pair<int, int> inputs;
    bool applicable = true;  // false when the start is already univalent
    timing::ValenceTag initial_valence = timing::ValenceTag::Undetermined;
    std::size_t steps_requested = 0;
    std::size_t steps_sustained = 0;
    bool undecided_throughout = false;
    bool anomaly = false;  // the protocol decided despite the adversary
    timing::Schedule schedule;
    std::size_t distinct_configs = 0;
    std::optional<std::pair<std::size_t, std::size_t>> cycle;
    std::uint64_t max_message_age = 0;

    std::vector<std::string> to_lines() const;
};

// Drives the FLP-style adversary against a read/write protocol under the
// asynchronous model and certifies the non-decision.
AttackReport run_rw_consensus_under_adversary(const timing::TableSystem& protocol,
                                              std::pair<int, int> inputs, std::size_t steps,
                                              int classify_depth);

struct DemoReport {
    Primitive primitive;
    // SwapRegister: exhaustive interleaving + crash enumeration.
    std::size_t executions_checked = 0;
    bool all_agree = true;
    bool all_valid = true;
    bool all_alive_terminated = true;
    bool solo_survivor_decides_own = true;
    // RWRegister: a checked witness of an interleaving with no termination.
    bool witness_found = false;
    std::size_t witness_steps = 0;
    std::optional<std::pair<std::size_t, std::size_t>> witness_cycle;

    std::vector<std::string> to_lines() const;
};

DemoReport consensus_number_demo(Primitive primitive, const timing::TableSystem* rw_protocol,
                                 std::pair<int, int> inputs = {0, 1});

}  // namespace bisync::consensus
