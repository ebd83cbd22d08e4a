#include "bisync/knowledge.hpp"

#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace bisync::knowledge {

AgentView observe(AgentId agent, const Trace& t, std::size_t index) {
    if (index >= t.states.size()) throw ValidationError("trace index out of range");
    const auto& st = t.states[index];
    return AgentView{agent, agent == AgentId::A ? st.a_local : st.b_local};
}

std::string EpistemicState::to_line(std::size_t index) const {
    std::ostringstream out;
    out << "k index=" << index
        << " ka=" << knows_fact[0] << " kb=" << knows_fact[1]
        << " kakb=" << knows_peer_knows[0] << " kbka=" << knows_peer_knows[1]
        << " ck=" << common_knowledge
        << " asym=" << asymmetry;
    return out.str();
}

namespace {

using World = std::pair<std::size_t, std::size_t>;  // (trace, index)

// View history an agent has accumulated by `index`. Synchronous agents can
// count rounds; asynchronous agents cannot, so equal consecutive views
// collapse there.
std::string history_key(const Trace& t, AgentId agent, std::size_t index, bool collapse) {
    std::ostringstream out;
    std::string prev;
    bool first = true;
    for (std::size_t i = 0; i <= index; ++i) {
        const std::string v = observe(agent, t, i).visible;
        if (collapse && !first && v == prev) continue;
        out << v << "\x1f";
        prev = v;
        first = false;
    }
    return out.str();
}

struct WorldGraph {
    std::vector<World> worlds;
    std::map<World, std::size_t> index_of;
    // Per agent: world -> equivalence class id; classes are the ~_p relation.
    std::vector<std::vector<std::size_t>> class_of;  // [agent][world]
    std::vector<std::vector<std::vector<std::size_t>>> class_members;  // [agent][class]
    std::vector<int> fact;

    const std::vector<std::size_t>& related(int agent, std::size_t w) const {
        return class_members[static_cast<std::size_t>(agent)]
                            [class_of[static_cast<std::size_t>(agent)][w]];
    }
};

WorldGraph build_worlds(const timing::TimingModel& model, const TraceSet& set,
                        std::size_t at_index, std::size_t world_ceiling) {
    const bool async_mode = model.kind == timing::TimingModel::Kind::Asynchronous;
    WorldGraph g;
    for (std::size_t t = 0; t < set.traces.size(); ++t) {
        const auto& tr = set.traces[t];
        // Synchronous-clock models relate worlds only at the same instant, so
        // the slice at `at_index` is closed under both relations.
        if (!async_mode) {
            if (at_index < tr.states.size()) {
                g.index_of[{t, at_index}] = g.worlds.size();
                g.worlds.push_back({t, at_index});
            }
            continue;
        }
        for (std::size_t i = 0; i < tr.states.size(); ++i) {
            g.index_of[{t, i}] = g.worlds.size();
            g.worlds.push_back({t, i});
        }
    }
    if (g.worlds.size() > world_ceiling)
        throw AnalysisError("trace-set world enumeration exceeded ceiling");

    g.fact.resize(g.worlds.size());
    for (std::size_t w = 0; w < g.worlds.size(); ++w)
        g.fact[w] = set.traces[g.worlds[w].first].states[g.worlds[w].second].fact;

    g.class_of.assign(2, std::vector<std::size_t>(g.worlds.size(), 0));
    g.class_members.assign(2, {});
    for (int agent = 0; agent < 2; ++agent) {
        std::map<std::string, std::size_t> classes;
        for (std::size_t w = 0; w < g.worlds.size(); ++w) {
            const auto [t, i] = g.worlds[w];
            const std::string key =
                history_key(set.traces[t], static_cast<AgentId>(agent), i, async_mode);
            auto [it, inserted] = classes.try_emplace(key, classes.size());
            if (inserted) g.class_members[static_cast<std::size_t>(agent)].push_back({});
            g.class_of[static_cast<std::size_t>(agent)][w] = it->second;
            g.class_members[static_cast<std::size_t>(agent)][it->second].push_back(w);
        }
    }
    return g;
}

}  // namespace

EpistemicState evaluate_knowledge(const timing::TimingModel& model, const TraceSet& set,
                                  std::size_t trace_index, std::size_t index,
                                  std::size_t world_ceiling) {
    if (trace_index >= set.traces.size()) throw ValidationError("trace index out of range");
    if (index >= set.traces[trace_index].states.size())
        throw ValidationError("state index out of range");

    const WorldGraph g = build_worlds(model, set, index, world_ceiling);
    const std::size_t w0 = g.index_of.at({trace_index, index});
    const int v0 = g.fact[w0];

    EpistemicState e;
    // K_p: the fact's value is constant over everything p cannot distinguish.
    auto knows_at = [&](int agent, std::size_t w) {
        for (std::size_t w2 : g.related(agent, w))
            if (g.fact[w2] != g.fact[w]) return false;
        return true;
    };
    for (int a = 0; a < 2; ++a) e.knows_fact[a] = knows_at(a, w0);

    // K_p K_q: in every p-indistinguishable world, q knows the fact and it has
    // the same value as here.
    for (int a = 0; a < 2; ++a) {
        const int peer = 1 - a;
        bool ok = true;
        for (std::size_t w2 : g.related(a, w0)) {
            if (g.fact[w2] != v0 || !knows_at(peer, w2)) {
                ok = false;
                break;
            }
        }
        e.knows_peer_knows[a] = ok;
    }

    // Common knowledge: greatest fixpoint = the fact is constant on the
    // closure of w0 under both indistinguishability relations.
    {
        std::set<std::size_t> seen{w0};
        std::deque<std::size_t> queue{w0};
        bool constant = true;
        while (!queue.empty() && constant) {
            const std::size_t w = queue.front();
            queue.pop_front();
            if (g.fact[w] != v0) {
                constant = false;
                break;
            }
            for (int a = 0; a < 2; ++a)
                for (std::size_t w2 : g.related(a, w))
                    if (seen.insert(w2).second) queue.push_back(w2);
        }
        e.common_knowledge = constant;
    }

    e.asymmetry = e.knows_fact[0] != e.knows_fact[1] ||
                  e.knows_peer_knows[0] != e.knows_peer_knows[1];

    // Monotone chain: CK implies both K_p K_q, which imply both K_p.
    if (e.common_knowledge && !(e.knows_peer_knows[0] && e.knows_peer_knows[1]))
        throw ProtocolError("knowledge chain violated: CK without K_p K_q");
    for (int a = 0; a < 2; ++a)
        if (e.knows_peer_knows[a] && !e.knows_fact[a])
            throw ProtocolError("knowledge chain violated: K_p K_q without K_p");
    return e;
}

TraceSet build_link_sweep_traces(const link::LinkParams& params, std::uint64_t slots,
                                 const std::vector<link::FaultSpec>& sweep,
                                 std::uint64_t fault_slot) {
    TraceSet set;
    for (const auto& fault : sweep) {
        link::SimulationSpec spec;
        spec.params = params;
        spec.slots = slots;
        if (fault.kind != link::FaultKind::None) spec.faults.push_back({fault_slot, fault});
        const auto sim = link::simulate(spec);

        Trace tr;
        tr.label = to_string(fault);
        for (const auto& rec : sim.trace) {
            GlobalState st;
            std::ostringstream a, b;
            const auto reg_str = [](const link::RegisterValue& v) {
                if (!v) return std::string("-");
                std::string s = "[";
                s += v->from_a ? "a" : "-";
                s += v->from_b ? "b" : "-";
                return s + "]";
            };
            a << "reg=" << reg_str(rec.registers.a_register)
              << ";out=" << (rec.outcome.tag == link::OutcomeTag::Committed ? "c" : "x")
              << ";idle=" << rec.outcome.idle << ";off=" << (rec.offer_a ? 1 : 0);
            b << "reg=" << reg_str(rec.registers.b_register)
              << ";out=" << (rec.outcome.tag == link::OutcomeTag::Committed ? "c" : "x")
              << ";idle=" << rec.outcome.idle << ";off=" << (rec.offer_b ? 1 : 0);
            st.a_local = a.str();
            st.b_local = b.str();
            st.fact = rec.outcome.tag == link::OutcomeTag::Committed ? 1 : 0;
            tr.states.push_back(std::move(st));
        }
        set.traces.push_back(std::move(tr));
    }
    return set;
}

TraceSet build_async_send_traces(std::size_t depth) {
    TraceSet set;
    // Delivery after d scheduler steps, d in 1..depth, plus the run where the
    // message is still undelivered at the horizon; all are legal asynchronous
    // schedules of the same send.
    for (std::size_t d = 1; d <= depth + 1; ++d) {
        const bool never = d == depth + 1;
        Trace tr;
        tr.label = never ? "undelivered" : "delivered@" + std::to_string(d);
        for (std::size_t i = 0; i <= depth; ++i) {
            GlobalState st;
            st.a_local = "sent";
            const bool got = !never && i >= d;
            st.b_local = got ? "got" : "idle";
            st.fact = got ? 1 : 0;
            tr.states.push_back(std::move(st));
        }
        set.traces.push_back(std::move(tr));
    }
    return set;
}

TraceSet build_sync_send_traces(std::uint64_t bound) {
    TraceSet set;
    // The model forces delivery within the bound; the receiver commits on its
    // next step after delivery.
    for (std::uint64_t d = 1; d <= bound; ++d) {
        Trace tr;
        tr.label = "delivered@" + std::to_string(d);
        for (std::uint64_t i = 0; i <= bound + 1; ++i) {
            GlobalState st;
            st.a_local = "sent";
            const bool got = i >= d;
            const bool committed = i >= d + 1;
            st.b_local = committed ? "committed" : (got ? "got" : "idle");
            st.fact = committed ? 1 : 0;
            tr.states.push_back(std::move(st));
        }
        set.traces.push_back(std::move(tr));
    }
    return set;
}

}  // namespace bisync::knowledge
