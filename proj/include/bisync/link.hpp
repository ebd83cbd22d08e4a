#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bisync/util.hpp"

namespace bisync::link {

// Duration of one slot in nanoseconds, derived from the physical parameters.
struct Delta {
    std::uint64_t nanoseconds = 0;

    bool operator==(const Delta&) const = default;
};

struct LinkParams {
    double cable_length_m = 0.0;
    double propagation_ns_per_m = 0.0;
    std::uint64_t frame_bits = 0;  // 0 models a bare heartbeat frame
    std::uint64_t line_rate_bps = 0;
    std::uint64_t processing_allowance_ns = 0;
};

// Round-trip propagation plus both serialization legs, rounded up to whole ns.
Delta compute_delta(const LinkParams& p);

struct Message {
    std::uint64_t tag = 0;
    std::string payload;  // opaque; the link never inspects it

    bool operator==(const Message&) const = default;
};

// Content of a register after a committed reconciliation. The slot commits the
// pair of offers as one unit; both registers hold the same joint value.
struct Reconciled {
    std::optional<Message> from_a;
    std::optional<Message> from_b;

    bool operator==(const Reconciled&) const = default;
};

using RegisterValue = std::optional<Reconciled>;  // nullopt = empty register

struct RegisterPair {
    RegisterValue a_register;
    RegisterValue b_register;

    bool boundary_valid() const {
        return a_register.has_value() == b_register.has_value() &&
               (!a_register || *a_register == *b_register);
    }
};

enum class Endpoint { A, B };

enum class FaultKind { None, LinkCut, Crash, Corrupt };

inline constexpr int kTicksPerSlot = 16;  // sub-slot fault placement granularity

struct FaultSpec {
    FaultKind kind = FaultKind::None;
    int tick = 0;            // 0..kTicksPerSlot-1
    Endpoint endpoint = Endpoint::A;

    bool operator==(const FaultSpec&) const = default;
};

std::string to_string(const FaultSpec& f);
FaultSpec parse_fault(const std::string& s);

// The single-fault vocabulary swept by the acceptance suite:
// none plus {link-cut, crash, corruption} x tick x endpoint.
std::vector<FaultSpec> exhaustive_fault_sweep();

enum class OutcomeTag { Committed, Aborted };

struct SlotOutcome {
    OutcomeTag tag = OutcomeTag::Aborted;
    std::uint64_t slot_index = 0;
    bool idle = false;  // aborted-as-idle: nothing was offered

    bool operator==(const SlotOutcome&) const = default;
};

struct SlotResult {
    RegisterPair registers;
    SlotOutcome outcome_a;  // as recorded at endpoint A
    SlotOutcome outcome_b;  // as recorded at endpoint B; always equals outcome_a
};

// One Shannon Slot: entry pair must satisfy the boundary invariant; any fault
// within the slot aborts it with both registers empty and both endpoints
// recording the same outcome.
SlotResult run_slot(const RegisterPair& entry, std::optional<Message> offer_a,
                    std::optional<Message> offer_b, const FaultSpec& fault,
                    std::uint64_t slot_index);

enum class SilenceVerdict { Pending, NegativeDefinitive };

SilenceVerdict resolve_silence(std::uint64_t slot_index, std::uint64_t elapsed_ns, Delta delta);

enum class Direction { AtoB, BtoA };

struct CreditState {
    std::uint32_t credits_a_to_b = 0;
    std::uint32_t credits_b_to_a = 0;
    std::uint32_t capacity = 1;
};

struct CreditConsume {
    CreditState state;
    bool refused = false;  // zero credits: the frame never enters the link
};

CreditConsume credit_consume(const CreditState& c, Direction d);
CreditState credit_grant(const CreditState& c, Direction d, std::uint32_t n);

// Frame accounting for the no-silent-loss invariant. Every offered frame is
// committed, refused locally, or aborted with both parties knowing.
struct LinkCounters {
    std::uint64_t offered = 0;
    std::uint64_t committed = 0;
    std::uint64_t refused = 0;
    std::uint64_t aborted_known = 0;
    std::uint64_t silent_drops = 0;  // must stay 0 in every simulation
    std::uint64_t silence_verdicts = 0;

    bool balanced() const { return offered == committed + refused + aborted_known; }
};

struct SlotTraceRecord {
    std::uint64_t slot_index = 0;
    std::optional<Message> offer_a, offer_b;
    FaultSpec fault;
    SlotOutcome outcome;
    RegisterPair registers;
    std::uint32_t credits_a_to_b = 0, credits_b_to_a = 0;

    // Stable field order for golden-file diffs.
    std::string to_line() const;
};

// Deterministic multi-slot simulation. Each endpoint offers a fresh frame
// every slot while it holds credit; faults come from the given schedule
// (slot index -> fault). A crashed endpoint stops offering; the survivor's
// next slot yields a NegativeDefinitive silence verdict.
struct SimulationResult {
    std::vector<SlotTraceRecord> trace;
    LinkCounters counters;
    Delta delta;
    bool crashed_a = false, crashed_b = false;
};

struct SimulationSpec {
    LinkParams params;
    std::uint64_t slots = 4;
    std::uint32_t credit_capacity = 4;
    std::vector<std::pair<std::uint64_t, FaultSpec>> faults;  // (slot, fault)
};

SimulationResult simulate(const SimulationSpec& spec);

}  // namespace bisync::link
