#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bisync/util.hpp"

namespace bisync::petri {

enum class Agent { Alice, Bob, Shared };
enum class PlaceKind { Epi, Ont };
enum class TransitionRole { Diamond, Heartbeat };

std::string to_string(Agent a);
std::string to_string(PlaceKind k);
std::string to_string(TransitionRole r);

struct Place {
    std::string id;
    Agent owner = Agent::Shared;
    PlaceKind kind = PlaceKind::Epi;
    int initial = 0;

    bool operator==(const Place&) const = default;
};

// Arc multiplicities are place-id -> count. The shipped net is 1-safe, so all
// multiplicities are 1, but the format and firing rule carry counts.
struct Transition {
    std::string id;
    Agent controller = Agent::Alice;  // Alice or Bob; never Shared
    TransitionRole role = TransitionRole::Heartbeat;
    std::map<std::string, int> inputs;
    std::map<std::string, int> outputs;

    bool operator==(const Transition&) const = default;
};

// Token counts indexed by the net's place order.
struct Marking {
    std::vector<int> counts;

    bool operator==(const Marking&) const = default;
    bool operator<(const Marking& o) const { return counts < o.counts; }
};

struct DualDiamondNet {
    std::string name;
    std::vector<Place> places;
    std::vector<Transition> transitions;
    std::vector<std::string> ownership_places;            // conserved token set
    std::pair<std::string, std::string> register_places;  // (alice side, bob side)
    std::vector<std::string> boundary_places;              // a marking is a slot boundary
                                                           // iff one of these holds a token
    std::map<std::string, std::string> mirror_places;      // Alice<->Bob bijection
    std::map<std::string, std::string> mirror_transitions;

    bool operator==(const DualDiamondNet&) const = default;

    std::size_t place_index(const std::string& id) const;
    std::size_t transition_index(const std::string& id) const;
    const Transition& transition(const std::string& id) const;
    Marking initial_marking() const;
    int capacity() const { return 1; }  // 1-safe by design

    bool is_boundary(const Marking& m) const;
    int ownership_total(const Marking& m) const;
    // Register pattern at a marking: (alice register tokens, bob register tokens).
    std::pair<int, int> register_pattern(const Marking& m) const;
    Marking mirror(const Marking& m) const;

    // Structural sanity used by the parser and the builder: unique ids, arcs
    // reference known places, controllers are agents, mirror maps are
    // involutions covering every element.
    void validate() const;
};

// The shipped bilateral-swap net: 16 transitions, 8 reachable markings, two
// message tokens conserved across the heartbeat-driven cycle.
DualDiamondNet build_dual_diamond();

std::vector<std::string> enabled(const DualDiamondNet& net, const Marking& m);
bool is_enabled(const DualDiamondNet& net, const Marking& m, const std::string& transition_id);
Marking fire(const DualDiamondNet& net, const Marking& m, const std::string& transition_id);

struct ReachEdge {
    std::size_t from;  // node indices into ReachabilityGraph::nodes
    std::string transition;
    std::size_t to;
};

struct ReachabilityGraph {
    std::vector<Marking> nodes;  // nodes[0] is the initial marking
    std::vector<ReachEdge> edges;

    std::optional<std::size_t> find_node(const Marking& m) const;
};

ReachabilityGraph reachability(const DualDiamondNet& net, std::size_t node_ceiling = 1000000);

struct ConservationReport {
    struct Row {
        Marking marking;
        int ownership_total = 0;
    };
    std::vector<Row> rows;
    int expected_total = 0;
    bool pass = false;
    std::vector<std::size_t> offending_nodes;
};

ConservationReport check_ownership_conservation(const DualDiamondNet& net, const ReachabilityGraph& g);

struct DichotomyReport {
    struct Row {
        std::size_t node = 0;
        std::pair<int, int> pattern;
    };
    std::vector<Row> boundary_rows;
    bool pass = false;  // every boundary pattern is (1,1) or (0,0)
    std::vector<std::size_t> offending_nodes;
};

DichotomyReport check_boundary_dichotomy(const DualDiamondNet& net, const ReachabilityGraph& g);

// True iff the declared Alice<->Bob bijection maps the net onto itself and the
// reachability graph's edge set is closed under it.
bool net_symmetric(const DualDiamondNet& net);
bool graph_symmetric(const DualDiamondNet& net, const ReachabilityGraph& g);

// Recomputes reachability with one transition removed and reports whether any
// contract (state count, safety, conservation, dichotomy, graph symmetry)
// breaks. Used to guard against vacuous checks.
struct MutationResult {
    std::string removed_transition;
    bool detected = false;
    std::string reason;
};
std::vector<MutationResult> mutation_sweep(const DualDiamondNet& net, std::size_t expected_states = 8);

std::uint64_t marking_hash(const DualDiamondNet& net, const Marking& m);
std::string marking_to_string(const DualDiamondNet& net, const Marking& m);

// Net-definition file, line oriented; parse(print(net)) == net, bit exact.
std::string print_net(const DualDiamondNet& net);
DualDiamondNet parse_net(const std::string& text);
DualDiamondNet load_net_file(const std::string& path);

}  // namespace bisync::petri
