#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bisync/link.hpp"
#include "bisync/util.hpp"

namespace bisync::timing {

struct TimingModel {
    enum class Kind { Asynchronous, Synchronous, Bisynchronous };
    Kind kind = Kind::Asynchronous;
    std::uint64_t sync_bound_steps = 0;  // Synchronous: max undelivered message age
    link::Delta delta{0};                // Bisynchronous: slot duration

    static TimingModel asynchronous() { return TimingModel{Kind::Asynchronous, 0, link::Delta{0}}; }
    static TimingModel synchronous(std::uint64_t bound) {
        if (bound == 0) throw ValidationError("synchronous bound must be positive");
        return TimingModel{Kind::Synchronous, bound, link::Delta{0}};
    }
    static TimingModel bisynchronous(link::Delta d) {
        if (d.nanoseconds == 0) throw ValidationError("bisynchronous delta must be positive");
        return TimingModel{Kind::Bisynchronous, 0, d};
    }
};

std::string to_string(const TimingModel& m);

struct Flight {
    std::string message;
    int destination = 0;
    std::uint64_t send_step = 0;

    bool operator==(const Flight&) const = default;
    bool operator<(const Flight& o) const {
        return std::tie(destination, message, send_step) <
               std::tie(o.destination, o.message, o.send_step);
    }
};

// A protocol configuration. shared_cells is the atomic register file for
// shared-memory protocols (empty for pure message passing). Flights are kept
// sorted so equal configurations serialize identically.
struct Configuration {
    std::vector<std::string> process_states;
    std::vector<std::string> shared_cells;
    std::vector<Flight> in_flight;
    std::vector<bool> crashed;
    std::uint64_t now = 0;

    bool operator==(const Configuration&) const = default;
    std::string key() const;  // canonical serialization for memoization
    void normalize() { std::sort(in_flight.begin(), in_flight.end()); }
};

struct Step {
    enum class Kind { Deliver, Crash, Boundary, CrashBoundary };
    Kind kind = Kind::Deliver;
    int process = 0;       // Deliver: destination; Crash/CrashBoundary: who halts
    std::string message;   // Deliver only

    bool operator==(const Step&) const = default;
};

std::string to_string(const Step& s);

struct Schedule {
    std::vector<Step> steps;
    int crash_budget = 1;

    int crash_count() const;
};

// A deterministic protocol machine the schedulers can drive.
class System {
  public:
    virtual ~System() = default;
    virtual std::string name() const = 0;
    virtual int process_count() const = 0;
    virtual Configuration initial(const std::vector<int>& inputs) const = 0;
    virtual bool requires_bisynchronous() const { return false; }

    // Deliver one in-flight message to its destination process.
    virtual Configuration deliver(const Configuration& c, std::size_t flight_index) const = 0;

    // One bisynchronous slot: every alive process resolves its pending steps
    // against a boundary-consistent snapshot; crash_pid halts at slot start.
    virtual Configuration slot(const Configuration& c, std::optional<int> crash_pid) const = 0;

    virtual std::optional<int> decision(const Configuration& c, int pid) const = 0;

    std::set<int> decided_values(const Configuration& c) const;
    bool all_alive_decided(const Configuration& c) const;
};

enum class ValenceTag { ZeroValent, OneValent, Bivalent, Undetermined };

std::string to_string(ValenceTag v);

struct Valence {
    ValenceTag tag = ValenceTag::Undetermined;
    int depth = 0;  // the exploration depth the classification is relative to
};

struct Limits {
    std::size_t node_ceiling = 2'000'000;
};

// Memo shared across classifier calls; key is (configuration, depth).
class ValenceCache {
  public:
    struct Flags {
        bool saw0 = false, saw1 = false, undecided_frontier = false;
    };
    std::map<std::pair<std::string, int>, Flags> entries;
    std::size_t nodes_explored = 0;
};

// Exhaustive bounded-depth exploration of every model-legal schedule.
Valence classify_valence(const System& sys, const TimingModel& model, const Configuration& c,
                         int depth, ValenceCache& cache, const Limits& limits = {});

// Candidate steps the adversary may take, in canonical (lowest-index-first)
// order: deliveries by flight order, then crashes by process id. Under the
// bisynchronous model these are whole-slot macro steps.
std::vector<Step> candidate_steps(const System& sys, const TimingModel& model,
                                  const Configuration& c, int crash_budget);

// Applies one step with model-legality checking. Throws SchedulerViolation for
// steps the model forbids (stale synchronous messages, individual deliveries
// under the bisynchronous model, steps by or to crashed processes).
Configuration schedule_step(const System& sys, const TimingModel& model, const Configuration& c,
                            const Step& step, int crash_budget = 1);

struct BivalentRun {
    Schedule schedule;
    std::vector<std::string> config_keys;  // config after each step
    std::size_t distinct_configs = 0;
    std::optional<std::pair<std::size_t, std::size_t>> cycle;  // [first, repeat) indices
    std::uint64_t max_message_age = 0;
};

// Greedy bivalence-preserving search: at each step take the lowest-indexed
// candidate whose successor the exhaustive classifier certifies Bivalent.
// Returns nullopt as soon as no such step exists.
std::optional<BivalentRun> find_bivalent_run(const System& sys, const TimingModel& model,
                                             const Configuration& start, std::size_t steps,
                                             int classify_depth, ValenceCache& cache,
                                             const Limits& limits = {});

// Replays a schedule from a configuration, enforcing model legality at each
// step; returns every intermediate configuration (replayed twice this must be
// bit-identical).
std::vector<Configuration> apply_schedule(const System& sys, const TimingModel& model,
                                          Configuration c, const Schedule& schedule);

// Expands bisynchronous macro steps into the primitive delivery sequence the
// slot performs, for cross-model legality replays.
Schedule expand_boundaries(const System& sys, const TimingModel& model, Configuration c,
                           const Schedule& schedule);

// Table-driven two-process automaton over a pair of atomic cells, loaded from
// a plain-text fixture. Process p writes cell p and reads cell 1-p; write
// states carry a single wildcard rule, read states branch on the peer cell
// value ('-' when unwritten, 'silence' when the peer is known crashed under
// the bisynchronous model).
class TableSystem : public System {
  public:
    static TableSystem parse(const std::string& text);
    static TableSystem load_file(const std::string& path);

    std::string name() const override { return m_name; }
    int process_count() const override { return 2; }
    Configuration initial(const std::vector<int>& inputs) const override;
    Configuration deliver(const Configuration& c, std::size_t flight_index) const override;
    Configuration slot(const Configuration& c, std::optional<int> crash_pid) const override;
    std::optional<int> decision(const Configuration& c, int pid) const override;

  private:
    struct Rule {
        std::string next;                  // state id or "decide=0"/"decide=1"
        std::optional<std::string> write;  // symbol written to the own cell
    };
    Configuration deliver_impl(const Configuration& c, std::size_t flight_index,
                               bool feed_silence) const;
    const Rule& rule_for(const std::string& state, const std::string& symbol) const;
    bool is_write_state(const std::string& state) const;

    std::string m_name;
    std::vector<std::string> m_symbols;
    std::map<int, std::string> m_init;                         // input bit -> state
    std::map<std::pair<std::string, std::string>, Rule> m_rules;  // (state, symbol)
    std::set<std::string> m_write_states;
};

// The bilateral-swap consensus protocol as a step-level system. Only the
// bisynchronous model may drive it: a clean slot commits both offers and both
// processes decide the lower-id value; a crash aborts the slot and the
// survivor decides its own input on the following definitive silence.
class SwapSystem : public System {
  public:
    std::string name() const override { return "swap-consensus"; }
    int process_count() const override { return 2; }
    bool requires_bisynchronous() const override { return true; }
    Configuration initial(const std::vector<int>& inputs) const override;
    Configuration deliver(const Configuration&, std::size_t) const override;
    Configuration slot(const Configuration& c, std::optional<int> crash_pid) const override;
    std::optional<int> decision(const Configuration& c, int pid) const override;
};

}  // namespace bisync::timing
