#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bisync/link.hpp"
#include "bisync/timing.hpp"
#include "bisync/util.hpp"

namespace bisync::knowledge {

enum class AgentId { A = 0, B = 1 };

// One instant of a run, split into what each agent can see of itself. The
// observability restriction is structural: an agent's view is built from its
// own components only, so perturbing the peer's side cannot change it.
struct GlobalState {
    std::string a_local;
    std::string b_local;
    int fact = 0;  // the proposition tracked by this trace family, as a value
};

struct Trace {
    std::string label;
    std::vector<GlobalState> states;
};

// The set of model-legal runs knowledge is evaluated against. Exact for
// finite families: the fixpoint over the indistinguishability graph of these
// traces is the Aumann common-knowledge construction.
struct TraceSet {
    std::vector<Trace> traces;
};

struct AgentView {
    AgentId agent;
    std::string visible;

    bool operator==(const AgentView&) const = default;
};

AgentView observe(AgentId agent, const Trace& t, std::size_t index);

struct EpistemicState {
    bool knows_fact[2] = {false, false};        // does the agent know the fact's value
    bool knows_peer_knows[2] = {false, false};  // K_a K_b and K_b K_a
    bool common_knowledge = false;
    bool asymmetry = false;  // the two agents' knowledge differs

    std::string to_line(std::size_t index) const;
};

// Knowledge by indistinguishability at (trace, index). Under synchronous and
// bisynchronous models agents share a clock, so worlds relate only at equal
// indices; under the asynchronous model agents cannot count scheduler steps,
// so views compare with consecutive stutter collapsed across all indices.
EpistemicState evaluate_knowledge(const timing::TimingModel& model, const TraceSet& set,
                                  std::size_t trace_index, std::size_t index,
                                  std::size_t world_ceiling = 1000000);

// Trace families.

// Every fault position of the link sweep, viewed at slot boundaries; the fact
// is the slot outcome.
TraceSet build_link_sweep_traces(const link::LinkParams& params, std::uint64_t slots,
                                 const std::vector<link::FaultSpec>& sweep,
                                 std::uint64_t fault_slot = 0);

// Unilateral fire-and-forget send under the asynchronous model: delivery at
// any step up to the horizon, or not yet at all. Fact: delivered by now.
TraceSet build_async_send_traces(std::size_t depth);

// Bounded-delay send: delivery forced within the bound, receiver commits one
// step after delivery. Fact: receiver has committed by now.
TraceSet build_sync_send_traces(std::uint64_t bound);

}  // namespace bisync::knowledge
