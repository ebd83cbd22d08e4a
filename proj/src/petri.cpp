#include "bisync/petri.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bisync::petri {

std::string to_string(Agent a) {
    switch (a) {
        case Agent::Alice: return "alice";
        case Agent::Bob: return "bob";
        case Agent::Shared: return "shared";
    }
    return "?";
}

std::string to_string(PlaceKind k) { return k == PlaceKind::Epi ? "epi" : "ont"; }
std::string to_string(TransitionRole r) { return r == TransitionRole::Diamond ? "diamond" : "heartbeat"; }

static Agent parse_agent(const std::string& s) {
    if (s == "alice") return Agent::Alice;
    if (s == "bob") return Agent::Bob;
    if (s == "shared") return Agent::Shared;
    throw ValidationError("unknown agent tag: " + s);
}

static PlaceKind parse_kind(const std::string& s) {
    if (s == "epi") return PlaceKind::Epi;
    if (s == "ont") return PlaceKind::Ont;
    throw ValidationError("unknown place kind: " + s);
}

static TransitionRole parse_role(const std::string& s) {
    if (s == "diamond") return TransitionRole::Diamond;
    if (s == "heartbeat") return TransitionRole::Heartbeat;
    throw ValidationError("unknown transition role: " + s);
}

std::size_t DualDiamondNet::place_index(const std::string& id) const {
    for (std::size_t i = 0; i < places.size(); ++i)
        if (places[i].id == id) return i;
    throw ValidationError("unknown place: " + id);
}

std::size_t DualDiamondNet::transition_index(const std::string& id) const {
    for (std::size_t i = 0; i < transitions.size(); ++i)
        if (transitions[i].id == id) return i;
    throw ValidationError("unknown transition: " + id);
}

const Transition& DualDiamondNet::transition(const std::string& id) const {
    return transitions[transition_index(id)];
}

Marking DualDiamondNet::initial_marking() const {
    Marking m;
    m.counts.reserve(places.size());
    for (const auto& p : places) m.counts.push_back(p.initial);
    return m;
}

bool DualDiamondNet::is_boundary(const Marking& m) const {
    for (const auto& id : boundary_places)
        if (m.counts[place_index(id)] > 0) return true;
    return false;
}

int DualDiamondNet::ownership_total(const Marking& m) const {
    int total = 0;
    for (const auto& id : ownership_places) total += m.counts[place_index(id)];
    return total;
}

std::pair<int, int> DualDiamondNet::register_pattern(const Marking& m) const {
    return {m.counts[place_index(register_places.first)],
            m.counts[place_index(register_places.second)]};
}

Marking DualDiamondNet::mirror(const Marking& m) const {
    Marking out;
    out.counts.assign(places.size(), 0);
    for (std::size_t i = 0; i < places.size(); ++i) {
        const auto it = mirror_places.find(places[i].id);
        if (it == mirror_places.end()) throw ValidationError("mirror map misses place " + places[i].id);
        out.counts[place_index(it->second)] = m.counts[i];
    }
    return out;
}

void DualDiamondNet::validate() const {
    std::set<std::string> ids;
    for (const auto& p : places)
        if (!ids.insert(p.id).second) throw ValidationError("duplicate place id: " + p.id);
    std::set<std::string> tids;
    for (const auto& t : transitions) {
        if (!tids.insert(t.id).second) throw ValidationError("duplicate transition id: " + t.id);
        if (t.controller == Agent::Shared)
            throw ValidationError("transition " + t.id + " must be controlled by an agent");
        if (t.inputs.empty() || t.outputs.empty())
            throw ValidationError("transition " + t.id + " needs nonempty inputs and outputs");
        for (const auto& [pid, mult] : t.inputs) {
            if (!ids.count(pid)) throw ValidationError(t.id + " input references unknown place " + pid);
            if (mult <= 0) throw ValidationError(t.id + " has nonpositive input multiplicity");
        }
        for (const auto& [pid, mult] : t.outputs) {
            if (!ids.count(pid)) throw ValidationError(t.id + " output references unknown place " + pid);
            if (mult <= 0) throw ValidationError(t.id + " has nonpositive output multiplicity");
        }
    }
    for (const auto& id : ownership_places)
        if (!ids.count(id)) throw ValidationError("ownership set references unknown place " + id);
    for (const auto& id : boundary_places)
        if (!ids.count(id)) throw ValidationError("boundary set references unknown place " + id);
    if (!ids.count(register_places.first) || !ids.count(register_places.second))
        throw ValidationError("register pair references unknown place");

    // Mirror maps must be involutions over the full element sets.
    if (mirror_places.size() != places.size())
        throw ValidationError("mirror-place map must cover every place");
    for (const auto& [a, b] : mirror_places) {
        if (!ids.count(a) || !ids.count(b)) throw ValidationError("mirror-place references unknown place");
        auto back = mirror_places.find(b);
        if (back == mirror_places.end() || back->second != a)
            throw ValidationError("mirror-place map is not an involution at " + a);
    }
    if (mirror_transitions.size() != transitions.size())
        throw ValidationError("mirror-trans map must cover every transition");
    for (const auto& [a, b] : mirror_transitions) {
        if (!tids.count(a) || !tids.count(b)) throw ValidationError("mirror-trans references unknown transition");
        auto back = mirror_transitions.find(b);
        if (back == mirror_transitions.end() || back->second != a)
            throw ValidationError("mirror-trans map is not an involution at " + a);
    }
}

DualDiamondNet build_dual_diamond() {
    DualDiamondNet net;
    net.name = "dual-diamond";

    auto place = [&](const std::string& id, Agent owner, PlaceKind kind, int init) {
        net.places.push_back(Place{id, owner, kind, init});
    };

    // Per-agent view: three places each (rest, offered, register). Shared
    // places carry the staged message tokens and the heartbeat baton.
    place("alice.rest", Agent::Alice, PlaceKind::Epi, 1);
    place("alice.offered", Agent::Alice, PlaceKind::Epi, 0);
    place("alice.reg", Agent::Alice, PlaceKind::Ont, 0);
    place("bob.rest", Agent::Bob, PlaceKind::Epi, 1);
    place("bob.offered", Agent::Bob, PlaceKind::Epi, 0);
    place("bob.reg", Agent::Bob, PlaceKind::Ont, 0);
    place("wire.home_a", Agent::Shared, PlaceKind::Ont, 1);
    place("wire.home_b", Agent::Shared, PlaceKind::Ont, 1);
    place("hb.idle", Agent::Shared, PlaceKind::Epi, 1);
    place("hb.ping", Agent::Shared, PlaceKind::Epi, 0);
    place("hb.pong", Agent::Shared, PlaceKind::Epi, 0);
    place("hb.commit", Agent::Shared, PlaceKind::Epi, 0);
    place("hb.release", Agent::Shared, PlaceKind::Epi, 0);
    place("hb.drain", Agent::Shared, PlaceKind::Epi, 0);

    auto trans = [&](const std::string& id, Agent ctrl, TransitionRole role,
                     std::vector<std::string> in, std::vector<std::string> out) {
        Transition t;
        t.id = id;
        t.controller = ctrl;
        t.role = role;
        for (auto& p : in) t.inputs[p] = 1;
        for (auto& p : out) t.outputs[p] = 1;
        net.transitions.push_back(std::move(t));
    };

    // Offer diamond: either agent leads a slot, the other answers, either
    // acknowledges the reconciliation into the committed boundary.
    trans("alice.offer_lead", Agent::Alice, TransitionRole::Diamond,
          {"hb.idle", "alice.rest", "wire.home_a"}, {"hb.ping", "alice.offered", "bob.reg"});
    trans("bob.offer_lead", Agent::Bob, TransitionRole::Diamond,
          {"hb.idle", "bob.rest", "wire.home_b"}, {"hb.ping", "bob.offered", "alice.reg"});
    trans("alice.offer_follow", Agent::Alice, TransitionRole::Diamond,
          {"hb.ping", "alice.rest", "wire.home_a"}, {"hb.pong", "alice.offered", "bob.reg"});
    trans("bob.offer_follow", Agent::Bob, TransitionRole::Diamond,
          {"hb.ping", "bob.rest", "wire.home_b"}, {"hb.pong", "bob.offered", "alice.reg"});
    trans("alice.retract", Agent::Alice, TransitionRole::Heartbeat,
          {"hb.ping", "alice.offered", "bob.reg"}, {"hb.idle", "alice.rest", "wire.home_a"});
    trans("bob.retract", Agent::Bob, TransitionRole::Heartbeat,
          {"hb.ping", "bob.offered", "alice.reg"}, {"hb.idle", "bob.rest", "wire.home_b"});
    trans("alice.commit_ack", Agent::Alice, TransitionRole::Heartbeat, {"hb.pong"}, {"hb.commit"});
    trans("bob.commit_ack", Agent::Bob, TransitionRole::Heartbeat, {"hb.pong"}, {"hb.commit"});

    // Release diamond: the committed pair drains back to the staged state so
    // the heartbeat can run the next cycle.
    trans("alice.release", Agent::Alice, TransitionRole::Diamond,
          {"hb.commit", "alice.offered", "alice.reg"}, {"hb.release", "alice.rest", "wire.home_a"});
    trans("bob.release", Agent::Bob, TransitionRole::Diamond,
          {"hb.commit", "bob.offered", "bob.reg"}, {"hb.release", "bob.rest", "wire.home_b"});
    trans("alice.drain", Agent::Alice, TransitionRole::Heartbeat,
          {"hb.release", "alice.offered", "alice.reg"}, {"hb.drain", "alice.rest", "wire.home_a"});
    trans("bob.drain", Agent::Bob, TransitionRole::Heartbeat,
          {"hb.release", "bob.offered", "bob.reg"}, {"hb.drain", "bob.rest", "wire.home_b"});
    trans("alice.relatch", Agent::Alice, TransitionRole::Heartbeat,
          {"hb.release", "alice.rest", "wire.home_a"}, {"hb.commit", "alice.offered", "alice.reg"});
    trans("bob.relatch", Agent::Bob, TransitionRole::Heartbeat,
          {"hb.release", "bob.rest", "wire.home_b"}, {"hb.commit", "bob.offered", "bob.reg"});
    trans("alice.idle_ack", Agent::Alice, TransitionRole::Heartbeat, {"hb.drain"}, {"hb.idle"});
    trans("bob.idle_ack", Agent::Bob, TransitionRole::Heartbeat, {"hb.drain"}, {"hb.idle"});

    net.ownership_places = {"alice.reg", "bob.reg", "wire.home_a", "wire.home_b"};
    net.register_places = {"alice.reg", "bob.reg"};
    net.boundary_places = {"hb.idle", "hb.commit"};

    auto mirror_pair = [&](const std::string& a, const std::string& b, bool is_place) {
        auto& m = is_place ? net.mirror_places : net.mirror_transitions;
        m[a] = b;
        m[b] = a;
    };
    mirror_pair("alice.rest", "bob.rest", true);
    mirror_pair("alice.offered", "bob.offered", true);
    mirror_pair("alice.reg", "bob.reg", true);
    mirror_pair("wire.home_a", "wire.home_b", true);
    for (const auto& hb : {"hb.idle", "hb.ping", "hb.pong", "hb.commit", "hb.release", "hb.drain"})
        net.mirror_places[hb] = hb;
    mirror_pair("alice.offer_lead", "bob.offer_lead", false);
    mirror_pair("alice.offer_follow", "bob.offer_follow", false);
    mirror_pair("alice.retract", "bob.retract", false);
    mirror_pair("alice.commit_ack", "bob.commit_ack", false);
    mirror_pair("alice.release", "bob.release", false);
    mirror_pair("alice.drain", "bob.drain", false);
    mirror_pair("alice.relatch", "bob.relatch", false);
    mirror_pair("alice.idle_ack", "bob.idle_ack", false);

    net.validate();
    return net;
}

static void check_marking_shape(const DualDiamondNet& net, const Marking& m) {
    if (m.counts.size() != net.places.size())
        throw ValidationError("marking does not assign a count to every place");
    for (int c : m.counts)
        if (c < 0) throw ValidationError("marking has a negative count");
}

bool is_enabled(const DualDiamondNet& net, const Marking& m, const std::string& transition_id) {
    const Transition& t = net.transition(transition_id);
    for (const auto& [pid, mult] : t.inputs)
        if (m.counts[net.place_index(pid)] < mult) return false;
    return true;
}

std::vector<std::string> enabled(const DualDiamondNet& net, const Marking& m) {
    check_marking_shape(net, m);
    std::vector<std::string> out;
    for (const auto& t : net.transitions)
        if (is_enabled(net, m, t.id)) out.push_back(t.id);
    return out;
}

Marking fire(const DualDiamondNet& net, const Marking& m, const std::string& transition_id) {
    check_marking_shape(net, m);
    if (!is_enabled(net, m, transition_id))
        throw ValidationError("transition " + transition_id + " is not enabled");
    const Transition& t = net.transition(transition_id);
    Marking out = m;
    for (const auto& [pid, mult] : t.inputs) out.counts[net.place_index(pid)] -= mult;
    for (const auto& [pid, mult] : t.outputs) {
        auto& c = out.counts[net.place_index(pid)];
        c += mult;
        if (c > net.capacity())
            throw ProtocolError("firing " + transition_id + " overflows capacity at place " + pid);
    }
    return out;
}

std::optional<std::size_t> ReachabilityGraph::find_node(const Marking& m) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i] == m) return i;
    return std::nullopt;
}

ReachabilityGraph reachability(const DualDiamondNet& net, std::size_t node_ceiling) {
    ReachabilityGraph g;
    std::map<Marking, std::size_t> index;
    std::deque<std::size_t> queue;

    const Marking init = net.initial_marking();
    g.nodes.push_back(init);
    index[init] = 0;
    queue.push_back(0);

    while (!queue.empty()) {
        const std::size_t ni = queue.front();
        queue.pop_front();
        const Marking m = g.nodes[ni];
        for (const auto& t : net.transitions) {
            if (!is_enabled(net, m, t.id)) continue;
            Marking next = fire(net, m, t.id);
            auto [it, inserted] = index.try_emplace(next, g.nodes.size());
            if (inserted) {
                g.nodes.push_back(next);
                queue.push_back(it->second);
                if (g.nodes.size() > node_ceiling)
                    throw AnalysisError("reachability exceeded node ceiling of " +
                                        std::to_string(node_ceiling));
            }
            g.edges.push_back(ReachEdge{ni, t.id, it->second});
        }
    }
    return g;
}

ConservationReport check_ownership_conservation(const DualDiamondNet& net, const ReachabilityGraph& g) {
    ConservationReport rep;
    rep.expected_total = net.ownership_total(net.initial_marking());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const int total = net.ownership_total(g.nodes[i]);
        rep.rows.push_back({g.nodes[i], total});
        if (total != rep.expected_total) rep.offending_nodes.push_back(i);
    }
    rep.pass = rep.offending_nodes.empty();
    return rep;
}

DichotomyReport check_boundary_dichotomy(const DualDiamondNet& net, const ReachabilityGraph& g) {
    DichotomyReport rep;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (!net.is_boundary(g.nodes[i])) continue;
        const auto pattern = net.register_pattern(g.nodes[i]);
        rep.boundary_rows.push_back({i, pattern});
        const bool ok = (pattern.first == 1 && pattern.second == 1) ||
                        (pattern.first == 0 && pattern.second == 0);
        if (!ok) rep.offending_nodes.push_back(i);
    }
    rep.pass = rep.offending_nodes.empty();
    return rep;
}

bool net_symmetric(const DualDiamondNet& net) {
    for (const auto& t : net.transitions) {
        auto it = net.mirror_transitions.find(t.id);
        if (it == net.mirror_transitions.end()) return false;
        const Transition& mt = net.transition(it->second);
        // Mirrored controller and mirrored arcs, same role.
        const Agent want = t.controller == Agent::Alice ? Agent::Bob : Agent::Alice;
        if (mt.controller != want || mt.role != t.role) return false;
        std::map<std::string, int> in, out;
        for (const auto& [p, k] : t.inputs) in[net.mirror_places.at(p)] = k;
        for (const auto& [p, k] : t.outputs) out[net.mirror_places.at(p)] = k;
        if (in != mt.inputs || out != mt.outputs) return false;
    }
    for (const auto& p : net.places) {
        const Place& mp = net.places[net.place_index(net.mirror_places.at(p.id))];
        if (mp.kind != p.kind || mp.initial != p.initial) return false;
        const Agent want = p.owner == Agent::Alice ? Agent::Bob
                         : p.owner == Agent::Bob   ? Agent::Alice
                                                   : Agent::Shared;
        if (mp.owner != want) return false;
    }
    const Marking init = net.initial_marking();
    return net.mirror(init) == init;
}

bool graph_symmetric(const DualDiamondNet& net, const ReachabilityGraph& g) {
    std::set<std::string> edge_keys;
    auto key = [&](const Marking& a, const std::string& t, const Marking& b) {
        return marking_to_string(net, a) + "|" + t + "|" + marking_to_string(net, b);
    };
    for (const auto& e : g.edges) edge_keys.insert(key(g.nodes[e.from], e.transition, g.nodes[e.to]));
    for (const auto& e : g.edges) {
        auto it = net.mirror_transitions.find(e.transition);
        if (it == net.mirror_transitions.end()) return false;
        if (!edge_keys.count(key(net.mirror(g.nodes[e.from]), it->second, net.mirror(g.nodes[e.to]))))
            return false;
    }
    return true;
}

std::vector<MutationResult> mutation_sweep(const DualDiamondNet& net, std::size_t expected_states) {
    std::vector<MutationResult> out;
    for (const auto& victim : net.transitions) {
        DualDiamondNet mutated = net;
        mutated.transitions.erase(
            std::remove_if(mutated.transitions.begin(), mutated.transitions.end(),
                           [&](const Transition& t) { return t.id == victim.id; }),
            mutated.transitions.end());

        MutationResult r;
        r.removed_transition = victim.id;
        try {
            const ReachabilityGraph g = reachability(mutated);
            if (g.nodes.size() != expected_states) {
                r.detected = true;
                r.reason = "state count " + std::to_string(g.nodes.size());
            } else if (!check_ownership_conservation(mutated, g).pass) {
                r.detected = true;
                r.reason = "conservation";
            } else if (!check_boundary_dichotomy(mutated, g).pass) {
                r.detected = true;
                r.reason = "dichotomy";
            } else if (!graph_symmetric(mutated, g)) {
                r.detected = true;
                r.reason = "graph symmetry";
            }
        } catch (const std::exception& e) {
            r.detected = true;
            r.reason = e.what();
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::string marking_to_string(const DualDiamondNet& net, const Marking& m) {
    std::ostringstream out;
    bool first = true;
    for (std::size_t i = 0; i < net.places.size(); ++i) {
        if (m.counts[i] == 0) continue;
        if (!first) out << ",";
        out << net.places[i].id;
        if (m.counts[i] != 1) out << "*" << m.counts[i];
        first = false;
    }
    return out.str();
}

std::uint64_t marking_hash(const DualDiamondNet& net, const Marking& m) {
    return fnv1a64(marking_to_string(net, m));
}

std::string print_net(const DualDiamondNet& net) {
    std::ostringstream out;
    out << "net " << net.name << "\n";
    for (const auto& p : net.places) {
        out << "place " << p.id << " " << to_string(p.owner) << " " << to_string(p.kind)
            << " init=" << p.initial << "\n";
    }
    auto arcs = [&](const std::map<std::string, int>& side) {
        std::vector<std::string> parts;
        for (const auto& [pid, mult] : side)
            parts.push_back(mult == 1 ? pid : pid + "*" + std::to_string(mult));
        return join(parts.begin(), parts.end(), " ");
    };
    for (const auto& t : net.transitions) {
        out << "trans " << t.id << " " << to_string(t.controller) << " " << to_string(t.role)
            << " | " << arcs(t.inputs) << " -> " << arcs(t.outputs) << "\n";
    }
    out << "ownership " << join(net.ownership_places.begin(), net.ownership_places.end(), " ") << "\n";
    out << "registers " << net.register_places.first << " " << net.register_places.second << "\n";
    out << "boundary " << join(net.boundary_places.begin(), net.boundary_places.end(), " ") << "\n";
    for (const auto& [a, b] : net.mirror_places)
        if (a <= b) out << "mirror-place " << a << " " << b << "\n";
    for (const auto& [a, b] : net.mirror_transitions)
        if (a <= b) out << "mirror-trans " << a << " " << b << "\n";
    return out.str();
}

static std::pair<std::string, int> parse_arc(const std::string& token) {
    const auto star = token.find('*');
    if (star == std::string::npos) return {token, 1};
    const std::string id = token.substr(0, star);
    const int mult = std::stoi(token.substr(star + 1));
    return {id, mult};
}

DualDiamondNet parse_net(const std::string& text) {
    DualDiamondNet net;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        const auto tok = split_ws(s);
        const auto fail = [&](const std::string& msg) {
            throw ValidationError("net file line " + std::to_string(lineno) + ": " + msg);
        };
        if (tok[0] == "net") {
            if (tok.size() != 2) fail("expected: net <name>");
            net.name = tok[1];
        } else if (tok[0] == "place") {
            if (tok.size() != 5 || tok[4].rfind("init=", 0) != 0)
                fail("expected: place <id> <owner> <kind> init=<n>");
            net.places.push_back(Place{tok[1], parse_agent(tok[2]), parse_kind(tok[3]),
                                       std::stoi(tok[4].substr(5))});
        } else if (tok[0] == "trans") {
            Transition t;
            if (tok.size() < 7) fail("short transition line");
            t.id = tok[1];
            t.controller = parse_agent(tok[2]);
            t.role = parse_role(tok[3]);
            if (tok[4] != "|") fail("expected '|' before arcs");
            std::size_t i = 5;
            for (; i < tok.size() && tok[i] != "->"; ++i) {
                auto [pid, mult] = parse_arc(tok[i]);
                t.inputs[pid] = mult;
            }
            if (i == tok.size()) fail("expected '->' in transition line");
            for (++i; i < tok.size(); ++i) {
                auto [pid, mult] = parse_arc(tok[i]);
                t.outputs[pid] = mult;
            }
            net.transitions.push_back(std::move(t));
        } else if (tok[0] == "ownership") {
            net.ownership_places.assign(tok.begin() + 1, tok.end());
        } else if (tok[0] == "registers") {
            if (tok.size() != 3) fail("expected: registers <alice-side> <bob-side>");
            net.register_places = {tok[1], tok[2]};
        } else if (tok[0] == "boundary") {
            net.boundary_places.assign(tok.begin() + 1, tok.end());
        } else if (tok[0] == "mirror-place") {
            if (tok.size() != 3) fail("expected: mirror-place <a> <b>");
            net.mirror_places[tok[1]] = tok[2];
            net.mirror_places[tok[2]] = tok[1];
        } else if (tok[0] == "mirror-trans") {
            if (tok.size() != 3) fail("expected: mirror-trans <a> <b>");
            net.mirror_transitions[tok[1]] = tok[2];
            net.mirror_transitions[tok[2]] = tok[1];
        } else {
            fail("unknown directive: " + tok[0]);
        }
    }
    net.validate();
    return net;
}

DualDiamondNet load_net_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open net file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_net(buf.str());
}

}  // namespace bisync::petri
