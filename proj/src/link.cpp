#include "bisync/link.hpp"

#include <cmath>
#include <sstream>

namespace bisync::link {

Delta compute_delta(const LinkParams& p) {
    if (!(p.cable_length_m > 0.0)) throw ValidationError("cable_length must be positive");
    if (!(p.propagation_ns_per_m > 0.0)) throw ValidationError("propagation_velocity must be positive");
    if (p.line_rate_bps == 0) throw ValidationError("line_rate must be positive");

    const long double propagation = 2.0L * static_cast<long double>(p.cable_length_m) *
                                    static_cast<long double>(p.propagation_ns_per_m);
    const long double serialization = 2.0L * static_cast<long double>(p.frame_bits) * 1e9L /
                                      static_cast<long double>(p.line_rate_bps);
    const long double total = propagation + serialization;
    const auto ns = static_cast<std::uint64_t>(std::ceil(total)) + p.processing_allowance_ns;
    if (ns == 0) throw ValidationError("computed delta is zero");
    return Delta{ns};
}

std::string to_string(const FaultSpec& f) {
    std::ostringstream out;
    switch (f.kind) {
        case FaultKind::None: return "none";
        case FaultKind::LinkCut: out << "cut"; break;
        case FaultKind::Crash: out << "crash"; break;
        case FaultKind::Corrupt: out << "corrupt"; break;
    }
    out << "@" << f.tick << ":" << (f.endpoint == Endpoint::A ? "a" : "b");
    return out.str();
}

FaultSpec parse_fault(const std::string& s) {
    if (s == "none") return FaultSpec{};
    const auto at = s.find('@');
    const auto colon = s.find(':', at == std::string::npos ? 0 : at);
    if (at == std::string::npos || colon == std::string::npos)
        throw ValidationError("fault spec must look like kind@tick:endpoint, got: " + s);
    FaultSpec f;
    const std::string kind = s.substr(0, at);
    if (kind == "cut") f.kind = FaultKind::LinkCut;
    else if (kind == "crash") f.kind = FaultKind::Crash;
    else if (kind == "corrupt") f.kind = FaultKind::Corrupt;
    else throw ValidationError("unknown fault kind: " + kind);
    f.tick = std::stoi(s.substr(at + 1, colon - at - 1));
    if (f.tick < 0 || f.tick >= kTicksPerSlot)
        throw ValidationError("fault tick out of range: " + s);
    const std::string ep = s.substr(colon + 1);
    if (ep == "a") f.endpoint = Endpoint::A;
    else if (ep == "b") f.endpoint = Endpoint::B;
    else throw ValidationError("unknown endpoint: " + ep);
    return f;
}

std::vector<FaultSpec> exhaustive_fault_sweep() {
    std::vector<FaultSpec> out;
    out.push_back(FaultSpec{});
    for (FaultKind kind : {FaultKind::LinkCut, FaultKind::Crash, FaultKind::Corrupt})
        for (int tick = 0; tick < kTicksPerSlot; ++tick)
            for (Endpoint ep : {Endpoint::A, Endpoint::B})
                out.push_back(FaultSpec{kind, tick, ep});
    return out;
}

SlotResult run_slot(const RegisterPair& entry, std::optional<Message> offer_a,
                    std::optional<Message> offer_b, const FaultSpec& fault,
                    std::uint64_t slot_index) {
    if (!entry.boundary_valid())
        throw ProtocolError("slot entered with a mixed register pair");
    if (fault.kind != FaultKind::None && (fault.tick < 0 || fault.tick >= kTicksPerSlot))
        throw ValidationError("fault tick outside the slot");

    SlotResult r;
    const bool idle = !offer_a && !offer_b;
    const bool faulted = fault.kind != FaultKind::None;

    // Sub-slot ticks exist for fault placement only; the pair resolves at the
    // boundary as one atomic event, identically at both endpoints.
    if (faulted || idle) {
        r.registers.a_register = std::nullopt;
        r.registers.b_register = std::nullopt;
        r.outcome_a = SlotOutcome{OutcomeTag::Aborted, slot_index, idle};
    } else {
        Reconciled joint;
        joint.from_a = std::move(offer_a);
        joint.from_b = std::move(offer_b);
        r.registers.a_register = joint;
        r.registers.b_register = joint;
        r.outcome_a = SlotOutcome{OutcomeTag::Committed, slot_index, false};
    }
    r.outcome_b = r.outcome_a;
    return r;
}

SilenceVerdict resolve_silence(std::uint64_t, std::uint64_t elapsed_ns, Delta delta) {
    return elapsed_ns >= delta.nanoseconds ? SilenceVerdict::NegativeDefinitive
                                           : SilenceVerdict::Pending;
}

CreditConsume credit_consume(const CreditState& c, Direction d) {
    CreditConsume out{c, false};
    auto& credits = d == Direction::AtoB ? out.state.credits_a_to_b : out.state.credits_b_to_a;
    if (credits == 0) {
        out.refused = true;
        return out;
    }
    credits -= 1;
    return out;
}

CreditState credit_grant(const CreditState& c, Direction d, std::uint32_t n) {
    if (n == 0) throw ValidationError("credit grant must be positive");
    CreditState out = c;
    auto& credits = d == Direction::AtoB ? out.credits_a_to_b : out.credits_b_to_a;
    if (credits + n > c.capacity)
        throw ValidationError("credit grant beyond capacity");
    credits += n;
    return out;
}

static std::string msg_str(const std::optional<Message>& m) {
    if (!m) return "-";
    return "t" + std::to_string(m->tag);
}

static std::string reg_str(const RegisterValue& v) {
    if (!v) return "-";
    return "[a=" + msg_str(v->from_a) + ",b=" + msg_str(v->from_b) + "]";
}

std::string SlotTraceRecord::to_line() const {
    std::ostringstream out;
    out << "slot=" << slot_index
        << " offer_a=" << msg_str(offer_a)
        << " offer_b=" << msg_str(offer_b)
        << " fault=" << to_string(fault)
        << " outcome=" << (outcome.tag == OutcomeTag::Committed ? "committed" : "aborted")
        << " idle=" << (outcome.idle ? 1 : 0)
        << " reg_a=" << reg_str(registers.a_register)
        << " reg_b=" << reg_str(registers.b_register)
        << " credits_ab=" << credits_a_to_b
        << " credits_ba=" << credits_b_to_a;
    return out.str();
}

SimulationResult simulate(const SimulationSpec& spec) {
    SimulationResult result;
    result.delta = compute_delta(spec.params);

    CreditState credits{spec.credit_capacity, spec.credit_capacity, spec.credit_capacity};
    RegisterPair pair;
    std::uint64_t next_tag_a = 1, next_tag_b = 1001;
    // Credits consumed in slot k are granted back at boundary k+1 once the
    // receiver has drained its buffer.
    std::uint32_t pending_grant_ab = 0, pending_grant_ba = 0;

    for (std::uint64_t slot = 0; slot < spec.slots; ++slot) {
        FaultSpec fault;
        for (const auto& [s, f] : spec.faults)
            if (s == slot) fault = f;

        std::optional<Message> offer_a, offer_b;
        if (!result.crashed_a) {
            result.counters.offered += 1;
            const auto take = credit_consume(credits, Direction::AtoB);
            credits = take.state;
            if (take.refused) {
                result.counters.refused += 1;
            } else {
                offer_a = Message{next_tag_a++, ""};
            }
        }
        if (!result.crashed_b) {
            result.counters.offered += 1;
            const auto take = credit_consume(credits, Direction::BtoA);
            credits = take.state;
            if (take.refused) {
                result.counters.refused += 1;
            } else {
                offer_b = Message{next_tag_b++, ""};
            }
        }

        // A dead endpoint cannot complete a bilateral reconciliation: every
        // slot with a crashed peer aborts, and the survivor reads the silence
        // as a definitive verdict rather than a guess.
        const bool peer_dead = result.crashed_a || result.crashed_b;
        SlotResult sr;
        if (peer_dead && fault.kind == FaultKind::None) {
            sr.registers = RegisterPair{};
            sr.outcome_a = SlotOutcome{OutcomeTag::Aborted, slot, !offer_a && !offer_b};
            sr.outcome_b = sr.outcome_a;
            result.counters.silence_verdicts += 1;
        } else {
            sr = run_slot(pair, offer_a, offer_b, fault, slot);
        }
        if (!(sr.outcome_a == sr.outcome_b))
            throw ProtocolError("endpoints recorded different outcomes");
        pair = sr.registers;

        const int offered_this_slot = (offer_a ? 1 : 0) + (offer_b ? 1 : 0);
        if (sr.outcome_a.tag == OutcomeTag::Committed) {
            result.counters.committed += offered_this_slot;
            pending_grant_ab += offer_a ? 1 : 0;
            pending_grant_ba += offer_b ? 1 : 0;
        } else {
            // Both parties observe the abort at the boundary; consumed credits
            // return immediately because nothing occupies the peer buffer.
            result.counters.aborted_known += offered_this_slot;
            if (offer_a) credits = credit_grant(credits, Direction::AtoB, 1);
            if (offer_b) credits = credit_grant(credits, Direction::BtoA, 1);
        }

        if (fault.kind == FaultKind::Crash) {
            if (fault.endpoint == Endpoint::A) result.crashed_a = true;
            else result.crashed_b = true;
        }

        SlotTraceRecord rec;
        rec.slot_index = slot;
        rec.offer_a = offer_a;
        rec.offer_b = offer_b;
        rec.fault = fault;
        rec.outcome = sr.outcome_a;
        rec.registers = pair;
        rec.credits_a_to_b = credits.credits_a_to_b;
        rec.credits_b_to_a = credits.credits_b_to_a;
        result.trace.push_back(std::move(rec));

        // Boundary: receiver drains, credits granted back for committed frames.
        if (pending_grant_ab) {
            credits = credit_grant(credits, Direction::AtoB, pending_grant_ab);
            pending_grant_ab = 0;
        }
        if (pending_grant_ba) {
            credits = credit_grant(credits, Direction::BtoA, pending_grant_ba);
            pending_grant_ba = 0;
        }
        // The committed pair is consumed by the applications at the boundary;
        // the next slot starts from empty registers.
        pair = RegisterPair{};
    }

    if (!result.counters.balanced())
        throw ProtocolError("frame accounting does not balance");
    return result;
}

}  // namespace bisync::link
