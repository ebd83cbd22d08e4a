#include "bisync/consensus.hpp"

#include <functional>
#include <sstream>

namespace bisync::consensus {

std::string SweepEntry::to_line() const {
    std::ostringstream out;
    auto dec = [](const std::optional<Decision>& d) {
        if (!d) return std::string("-");
        return std::to_string(d->value) + "@" + std::to_string(d->slot);
    };
    out << "fault=" << link::to_string(fault)
        << " decision_a=" << dec(decision_a)
        << " decision_b=" << dec(decision_b)
        << " aborted_slots=" << aborted_slots
        << " agreement=" << agreement
        << " validity=" << validity
        << " within_bound=" << within_bound;
    return out.str();
}

SwapConsensusReport run_swap_consensus(std::pair<int, int> inputs,
                                       const std::vector<link::FaultSpec>& sweep,
                                       std::uint64_t max_slots) {
    SwapConsensusReport report;
    report.inputs = inputs;

    for (const auto& fault : sweep) {
        SweepEntry entry;
        entry.fault = fault;
        bool crashed_a = false, crashed_b = false;
        link::RegisterPair pair;

        for (std::uint64_t slot = 1; slot <= max_slots; ++slot) {
            const bool a_open = !crashed_a && !entry.decision_a;
            const bool b_open = !crashed_b && !entry.decision_b;
            if (!a_open && !b_open) break;

            // Survivor facing a peer that crashed in an earlier slot: the
            // silence verdict is definitive, decide own input without waiting.
            if (a_open && crashed_b) {
                entry.aborted_slots += 1;
                entry.decision_a = Decision{inputs.first, slot};
                break;
            }
            if (b_open && crashed_a) {
                entry.aborted_slots += 1;
                entry.decision_b = Decision{inputs.second, slot};
                break;
            }

            std::optional<link::Message> offer_a, offer_b;
            if (a_open) offer_a = link::Message{static_cast<std::uint64_t>(inputs.first), ""};
            if (b_open) offer_b = link::Message{static_cast<std::uint64_t>(inputs.second), ""};

            const link::FaultSpec slot_fault = slot == 1 ? fault : link::FaultSpec{};
            const auto result = link::run_slot(pair, offer_a, offer_b, slot_fault, slot);

            if (slot_fault.kind == link::FaultKind::Crash) {
                if (slot_fault.endpoint == link::Endpoint::A) crashed_a = true;
                else crashed_b = true;
            }

            if (result.outcome_a.tag == link::OutcomeTag::Committed) {
                // Both registers hold both offers; decide the lower id's value.
                const auto& joint = *result.registers.a_register;
                const int value = static_cast<int>(joint.from_a->tag);
                entry.decision_a = Decision{value, slot};
                entry.decision_b = Decision{value, slot};
                break;
            }
            entry.aborted_slots += 1;
        }

        if (entry.decision_a && entry.decision_b)
            entry.agreement = entry.decision_a->value == entry.decision_b->value;
        else
            entry.agreement = true;  // at most one decider: agreement is vacuous

        entry.validity = true;
        for (const auto& d : {entry.decision_a, entry.decision_b})
            if (d && d->value != inputs.first && d->value != inputs.second) entry.validity = false;

        const std::uint64_t faulted = fault.kind == link::FaultKind::None ? 0 : 1;
        entry.within_bound = true;
        for (const auto& d : {entry.decision_a, entry.decision_b})
            if (d && d->slot > 1 + faulted) entry.within_bound = false;
        // Someone must decide in every entry.
        if (!entry.decision_a && !entry.decision_b) entry.within_bound = false;

        report.all_ok = report.all_ok && entry.agreement && entry.validity && entry.within_bound;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

std::vector<std::string> AttackReport::to_lines() const {
    std::vector<std::string> out;
    std::ostringstream head;
    head << "attack inputs=(" << inputs.first << "," << inputs.second << ")"
         << " applicable=" << applicable
         << " initial=" << timing::to_string(initial_valence)
         << " steps=" << steps_sustained << "/" << steps_requested
         << " undecided=" << undecided_throughout
         << " anomaly=" << anomaly
         << " distinct_configs=" << distinct_configs
         << " max_message_age=" << max_message_age;
    if (cycle) head << " cycle=[" << cycle->first << "," << cycle->second << ")";
    out.push_back(head.str());
    for (std::size_t i = 0; i < schedule.steps.size(); ++i)
        out.push_back("step " + std::to_string(i + 1) + " " + timing::to_string(schedule.steps[i]));
    return out;
}

AttackReport run_rw_consensus_under_adversary(const timing::TableSystem& protocol,
                                              std::pair<int, int> inputs, std::size_t steps,
                                              int classify_depth) {
    AttackReport report;
    report.inputs = inputs;
    report.steps_requested = steps;

    const auto model = timing::TimingModel::asynchronous();
    const auto initial = protocol.initial({inputs.first, inputs.second});
    timing::ValenceCache cache;
    report.initial_valence =
        timing::classify_valence(protocol, model, initial, classify_depth, cache).tag;

    if (report.initial_valence != timing::ValenceTag::Bivalent) {
        // Univalent start (e.g. unanimous inputs): the attack does not apply.
        report.applicable = false;
        return report;
    }

    const auto run =
        timing::find_bivalent_run(protocol, model, initial, steps, classify_depth, cache);
    if (!run) {
        report.applicable = true;
        report.steps_sustained = 0;
        return report;
    }
    report.schedule = run->schedule;
    report.steps_sustained = run->schedule.steps.size();
    report.distinct_configs = run->distinct_configs;
    report.cycle = run->cycle;
    report.max_message_age = run->max_message_age;

    // Certify non-decision by replaying the schedule.
    report.undecided_throughout = true;
    for (const auto& c : timing::apply_schedule(protocol, model, initial, run->schedule))
        if (!protocol.decided_values(c).empty()) report.undecided_throughout = false;
    report.anomaly = !report.undecided_throughout;
    return report;
}

std::vector<std::string> DemoReport::to_lines() const {
    std::vector<std::string> out;
    std::ostringstream head;
    if (primitive == Primitive::SwapRegister) {
        head << "demo primitive=swap executions=" << executions_checked
             << " all_agree=" << all_agree << " all_valid=" << all_valid
             << " all_alive_terminated=" << all_alive_terminated
             << " solo_survivor_decides_own=" << solo_survivor_decides_own;
    } else {
        head << "demo primitive=rw witness_found=" << witness_found
             << " witness_steps=" << witness_steps;
        if (witness_cycle)
            head << " cycle=[" << witness_cycle->first << "," << witness_cycle->second << ")";
    }
    out.push_back(head.str());
    return out;
}

namespace {

// Exhaustive execution tree of the one-shot swap-register protocol: each
// process performs a single atomic exchange and decides the old value it got
// back (its own input when it swapped first).
struct SwapExecState {
    int cell = -1;  // -1 empty, else the value deposited by the first swapper
    std::array<std::optional<int>, 2> decided;
    std::array<bool, 2> done{false, false};
    std::array<bool, 2> crashed{false, false};
};

void explore_swap(const SwapExecState& st, std::pair<int, int> inputs, int crashes_left,
                  DemoReport& report) {
    const std::array<int, 2> input{inputs.first, inputs.second};
    bool terminal = true;
    for (int p = 0; p < 2; ++p) {
        if (st.done[static_cast<std::size_t>(p)] || st.crashed[static_cast<std::size_t>(p)])
            continue;
        terminal = false;
        {
            SwapExecState next = st;
            const int old = next.cell;
            next.cell = input[static_cast<std::size_t>(p)];
            next.decided[static_cast<std::size_t>(p)] =
                old == -1 ? input[static_cast<std::size_t>(p)] : old;
            next.done[static_cast<std::size_t>(p)] = true;
            explore_swap(next, inputs, crashes_left, report);
        }
        if (crashes_left > 0) {
            SwapExecState next = st;
            next.crashed[static_cast<std::size_t>(p)] = true;
            explore_swap(next, inputs, crashes_left - 1, report);
        }
    }
    if (!terminal) return;

    report.executions_checked += 1;
    std::vector<int> decisions;
    for (int p = 0; p < 2; ++p)
        if (st.decided[static_cast<std::size_t>(p)])
            decisions.push_back(*st.decided[static_cast<std::size_t>(p)]);
    for (std::size_t i = 1; i < decisions.size(); ++i)
        if (decisions[i] != decisions[0]) report.all_agree = false;
    for (int d : decisions)
        if (d != inputs.first && d != inputs.second) report.all_valid = false;
    for (int p = 0; p < 2; ++p) {
        const auto pi = static_cast<std::size_t>(p);
        if (!st.crashed[pi] && !st.decided[pi]) report.all_alive_terminated = false;
        // Wait-freedom: a survivor running solo decides its own input.
        if (!st.crashed[pi] && st.crashed[1 - pi] && st.cell == input[pi] &&
            st.decided[pi] && *st.decided[pi] != input[pi] && st.cell != -1)
            report.solo_survivor_decides_own = false;
    }
}

}  // namespace

DemoReport consensus_number_demo(Primitive primitive, const timing::TableSystem* rw_protocol,
                                 std::pair<int, int> inputs) {
    DemoReport report;
    report.primitive = primitive;

    if (primitive == Primitive::SwapRegister) {
        explore_swap(SwapExecState{}, inputs, 1, report);
        return report;
    }

    if (!rw_protocol) throw ValidationError("the rw demo needs the shipped protocol fixture");
    // Witness: a bivalence-preserving interleaving that revisits a
    // configuration; pumping the cycle extends it to any length, so the
    // protocol space admits a non-terminating adversarial interleaving.
    const auto attack = run_rw_consensus_under_adversary(*rw_protocol, inputs, 256, 12);
    report.witness_found = attack.applicable && attack.undecided_throughout &&
                           attack.steps_sustained == 256 && attack.cycle.has_value();
    report.witness_steps = attack.steps_sustained;
    report.witness_cycle = attack.cycle;
    return report;
}

}  // namespace bisync::consensus
