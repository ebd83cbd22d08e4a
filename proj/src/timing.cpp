#include "bisync/timing.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace bisync::timing {

std::string to_string(const TimingModel& m) {
    switch (m.kind) {
        case TimingModel::Kind::Asynchronous: return "asynchronous";
        case TimingModel::Kind::Synchronous:
            return "synchronous(" + std::to_string(m.sync_bound_steps) + ")";
        case TimingModel::Kind::Bisynchronous:
            return "bisynchronous(" + std::to_string(m.delta.nanoseconds) + "ns)";
    }
    return "?";
}

std::string Configuration::key() const {
    std::ostringstream out;
    out << "p:";
    for (const auto& s : process_states) out << s << ";";
    out << "c:";
    for (const auto& s : shared_cells) out << s << ";";
    out << "f:";
    for (const auto& f : in_flight) out << f.message << ">" << f.destination << ";";
    out << "x:";
    for (bool b : crashed) out << (b ? 1 : 0);
    return out.str();
}

std::string to_string(const Step& s) {
    switch (s.kind) {
        case Step::Kind::Deliver:
            return "deliver " + s.message + " -> p" + std::to_string(s.process);
        case Step::Kind::Crash: return "crash p" + std::to_string(s.process);
        case Step::Kind::Boundary: return "slot";
        case Step::Kind::CrashBoundary: return "slot crash p" + std::to_string(s.process);
    }
    return "?";
}

int Schedule::crash_count() const {
    int n = 0;
    for (const auto& s : steps)
        if (s.kind == Step::Kind::Crash || s.kind == Step::Kind::CrashBoundary) ++n;
    return n;
}

std::set<int> System::decided_values(const Configuration& c) const {
    std::set<int> out;
    for (int p = 0; p < process_count(); ++p)
        if (auto d = decision(c, p)) out.insert(*d);
    return out;
}

bool System::all_alive_decided(const Configuration& c) const {
    for (int p = 0; p < process_count(); ++p)
        if (!c.crashed[static_cast<std::size_t>(p)] && !decision(c, p)) return false;
    return true;
}

std::string to_string(ValenceTag v) {
    switch (v) {
        case ValenceTag::ZeroValent: return "zero-valent";
        case ValenceTag::OneValent: return "one-valent";
        case ValenceTag::Bivalent: return "bivalent";
        case ValenceTag::Undetermined: return "undetermined";
    }
    return "?";
}

static void require_model_fit(const System& sys, const TimingModel& model) {
    if (sys.requires_bisynchronous() && model.kind != TimingModel::Kind::Bisynchronous)
        throw SchedulerViolation(sys.name() + " declares it requires the bisynchronous model");
}

std::vector<Step> candidate_steps(const System& sys, const TimingModel& model,
                                  const Configuration& c, int crash_budget) {
    require_model_fit(sys, model);
    std::vector<Step> out;
    const int crashes_so_far =
        static_cast<int>(std::count(c.crashed.begin(), c.crashed.end(), true));

    if (model.kind == TimingModel::Kind::Bisynchronous) {
        if (sys.all_alive_decided(c)) return out;
        out.push_back(Step{Step::Kind::Boundary, 0, ""});
        if (crashes_so_far < crash_budget)
            for (int p = 0; p < sys.process_count(); ++p)
                if (!c.crashed[static_cast<std::size_t>(p)])
                    out.push_back(Step{Step::Kind::CrashBoundary, p, ""});
        return out;
    }

    // Synchronous: if messages are at the age limit, only their delivery is legal.
    std::vector<std::size_t> deliverable;
    bool expiring = false;
    for (std::size_t i = 0; i < c.in_flight.size(); ++i) {
        const auto& f = c.in_flight[i];
        if (c.crashed[static_cast<std::size_t>(f.destination)]) continue;
        deliverable.push_back(i);
        if (model.kind == TimingModel::Kind::Synchronous &&
            c.now + 1 - f.send_step > model.sync_bound_steps)
            expiring = true;
    }
    for (std::size_t i : deliverable) {
        const auto& f = c.in_flight[i];
        if (expiring && model.kind == TimingModel::Kind::Synchronous &&
            c.now + 1 - f.send_step <= model.sync_bound_steps)
            continue;  // must service an expiring message first
        out.push_back(Step{Step::Kind::Deliver, f.destination, f.message});
    }
    if (!expiring && crashes_so_far < crash_budget)
        for (int p = 0; p < sys.process_count(); ++p)
            if (!c.crashed[static_cast<std::size_t>(p)])
                out.push_back(Step{Step::Kind::Crash, p, ""});
    return out;
}

Configuration schedule_step(const System& sys, const TimingModel& model, const Configuration& c,
                            const Step& step, int crash_budget) {
    require_model_fit(sys, model);
    const int crashes_so_far =
        static_cast<int>(std::count(c.crashed.begin(), c.crashed.end(), true));

    switch (step.kind) {
        case Step::Kind::Boundary:
        case Step::Kind::CrashBoundary: {
            if (model.kind != TimingModel::Kind::Bisynchronous)
                throw SchedulerViolation("slot boundary steps exist only under the bisynchronous model");
            std::optional<int> crash;
            if (step.kind == Step::Kind::CrashBoundary) {
                if (crashes_so_far >= crash_budget)
                    throw SchedulerViolation("crash budget exhausted");
                crash = step.process;
            }
            return sys.slot(c, crash);
        }
        case Step::Kind::Crash: {
            if (model.kind == TimingModel::Kind::Bisynchronous)
                throw SchedulerViolation("under bisynchrony crashes attach to a slot boundary");
            if (crashes_so_far >= crash_budget) throw SchedulerViolation("crash budget exhausted");
            if (c.crashed[static_cast<std::size_t>(step.process)])
                throw SchedulerViolation("process already crashed");
            Configuration out = c;
            out.crashed[static_cast<std::size_t>(step.process)] = true;
            out.now += 1;
            if (model.kind == TimingModel::Kind::Synchronous)
                for (const auto& f : out.in_flight)
                    if (!out.crashed[static_cast<std::size_t>(f.destination)] &&
                        out.now - f.send_step > model.sync_bound_steps)
                        throw SchedulerViolation("a message would exceed the synchronous bound");
            return out;
        }
        case Step::Kind::Deliver: {
            if (model.kind == TimingModel::Kind::Bisynchronous)
                throw SchedulerViolation(
                    "individual deliveries would carry unresolved state across a slot boundary");
            std::optional<std::size_t> idx;
            for (std::size_t i = 0; i < c.in_flight.size(); ++i)
                if (c.in_flight[i].destination == step.process &&
                    c.in_flight[i].message == step.message) {
                    idx = i;
                    break;
                }
            if (!idx) throw SchedulerViolation("delivery references a message not in flight");
            if (c.crashed[static_cast<std::size_t>(step.process)])
                throw SchedulerViolation("cannot deliver to a crashed process");
            Configuration out = sys.deliver(c, *idx);
            if (model.kind == TimingModel::Kind::Synchronous)
                for (const auto& f : out.in_flight)
                    if (!out.crashed[static_cast<std::size_t>(f.destination)] &&
                        out.now - f.send_step > model.sync_bound_steps)
                        throw SchedulerViolation("a message would exceed the synchronous bound");
            return out;
        }
    }
    throw ValidationError("unknown step kind");
}

namespace {

ValenceCache::Flags classify_impl(const System& sys, const TimingModel& model,
                                  const Configuration& c, int depth, ValenceCache& cache,
                                  const Limits& limits) {
    const auto key = std::make_pair(c.key(), depth);
    if (auto it = cache.entries.find(key); it != cache.entries.end()) return it->second;
    if (++cache.nodes_explored > limits.node_ceiling)
        throw AnalysisError("valence exploration exceeded node ceiling");

    ValenceCache::Flags flags;
    const auto decided = sys.decided_values(c);
    flags.saw0 = decided.count(0) > 0;
    flags.saw1 = decided.count(1) > 0;

    if (!(flags.saw0 && flags.saw1)) {
        const auto steps = candidate_steps(sys, model, c, /*crash_budget=*/1);
        bool any_live = false;
        for (const auto& s : steps) {
            Configuration next = schedule_step(sys, model, c, s);
            next.normalize();
            if (next == c) continue;  // spin step reaches nothing new
            any_live = true;
            if (depth == 0) {
                flags.undecided_frontier = true;
                break;
            }
            const auto sub = classify_impl(sys, model, next, depth - 1, cache, limits);
            flags.saw0 |= sub.saw0;
            flags.saw1 |= sub.saw1;
            flags.undecided_frontier |= sub.undecided_frontier;
            if (flags.saw0 && flags.saw1) break;
        }
        (void)any_live;
    }
    cache.entries[key] = flags;
    return flags;
}

}  // namespace

Valence classify_valence(const System& sys, const TimingModel& model, const Configuration& c,
                         int depth, ValenceCache& cache, const Limits& limits) {
    Configuration norm = c;
    norm.normalize();
    const auto flags = classify_impl(sys, model, norm, depth, cache, limits);
    Valence v;
    v.depth = depth;
    if (flags.saw0 && flags.saw1) v.tag = ValenceTag::Bivalent;
    else if (flags.saw0 && !flags.undecided_frontier) v.tag = ValenceTag::ZeroValent;
    else if (flags.saw1 && !flags.undecided_frontier) v.tag = ValenceTag::OneValent;
    else v.tag = ValenceTag::Undetermined;
    return v;
}

std::optional<BivalentRun> find_bivalent_run(const System& sys, const TimingModel& model,
                                             const Configuration& start, std::size_t steps,
                                             int classify_depth, ValenceCache& cache,
                                             const Limits& limits) {
    require_model_fit(sys, model);
    BivalentRun run;
    Configuration c = start;
    c.normalize();
    std::map<std::string, std::size_t> first_seen;
    first_seen[c.key()] = 0;

    for (std::size_t i = 0; i < steps; ++i) {
        std::optional<Step> chosen;
        Configuration next;
        for (const auto& s : candidate_steps(sys, model, c, /*crash_budget=*/1)) {
            Configuration cand = schedule_step(sys, model, c, s);
            cand.normalize();
            if (classify_valence(sys, model, cand, classify_depth, cache, limits).tag ==
                ValenceTag::Bivalent) {
                chosen = s;
                next = std::move(cand);
                break;  // lowest-indexed bivalence-preserving step
            }
        }
        if (!chosen) return std::nullopt;

        for (const auto& f : c.in_flight)
            run.max_message_age = std::max(run.max_message_age, c.now + 1 - f.send_step);

        run.schedule.steps.push_back(*chosen);
        c = std::move(next);
        const std::string k = c.key();
        run.config_keys.push_back(k);
        if (auto it = first_seen.find(k); it != first_seen.end()) {
            if (!run.cycle) run.cycle = std::make_pair(it->second, i + 1);
        } else {
            first_seen[k] = i + 1;
        }
    }
    run.distinct_configs = first_seen.size();
    return run;
}

std::vector<Configuration> apply_schedule(const System& sys, const TimingModel& model,
                                          Configuration c, const Schedule& schedule) {
    std::vector<Configuration> out;
    c.normalize();
    out.push_back(c);
    for (const auto& s : schedule.steps) {
        c = schedule_step(sys, model, c, s, schedule.crash_budget);
        c.normalize();
        out.push_back(c);
    }
    return out;
}

Schedule expand_boundaries(const System& sys, const TimingModel& model, Configuration c,
                           const Schedule& schedule) {
    Schedule out;
    out.crash_budget = schedule.crash_budget;
    c.normalize();
    for (const auto& s : schedule.steps) {
        if (s.kind == Step::Kind::Boundary || s.kind == Step::Kind::CrashBoundary) {
            if (s.kind == Step::Kind::CrashBoundary)
                out.steps.push_back(Step{Step::Kind::Crash, s.process, ""});
            // A slot delivers every pending token twice (write then read
            // phase) in process order; mirror that as primitive deliveries.
            Configuration before = c;
            c = sys.slot(c, s.kind == Step::Kind::CrashBoundary ? std::optional<int>(s.process)
                                                                : std::nullopt);
            c.normalize();
            for (int phase = 0; phase < 2; ++phase)
                for (int p = 0; p < sys.process_count(); ++p) {
                    const bool alive = !c.crashed[static_cast<std::size_t>(p)];
                    bool had_token = false;
                    for (const auto& f : before.in_flight)
                        if (f.destination == p) had_token = true;
                    if (alive && had_token)
                        out.steps.push_back(Step{Step::Kind::Deliver, p, "tok"});
                }
        } else {
            out.steps.push_back(s);
            c = schedule_step(sys, model, c, s, schedule.crash_budget);
            c.normalize();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// TableSystem

TableSystem TableSystem::parse(const std::string& text) {
    TableSystem sys;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        const auto tok = split_ws(s);
        const auto fail = [&](const std::string& msg) {
            throw ValidationError("protocol file line " + std::to_string(lineno) + ": " + msg);
        };
        if (tok[0] == "protocol") {
            if (tok.size() != 2) fail("expected: protocol <name>");
            sys.m_name = tok[1];
        } else if (tok[0] == "processes") {
            if (tok.size() != 2 || tok[1] != "2") fail("only two-process protocols are supported");
        } else if (tok[0] == "symbols") {
            sys.m_symbols.assign(tok.begin() + 1, tok.end());
        } else if (tok[0] == "init") {
            if (tok.size() != 3) fail("expected: init <input-bit> <state>");
            sys.m_init[std::stoi(tok[1])] = tok[2];
        } else if (tok[0] == "rule") {
            // rule <state> <symbol|*> -> <state'|decide=b> [write=<symbol>]
            if (tok.size() < 5 || tok[3] != "->") fail("malformed rule");
            Rule r;
            r.next = tok[4];
            for (std::size_t i = 5; i < tok.size(); ++i) {
                if (tok[i].rfind("write=", 0) == 0) r.write = tok[i].substr(6);
                else fail("unknown rule attribute: " + tok[i]);
            }
            const auto key = std::make_pair(tok[1], tok[2]);
            if (sys.m_rules.count(key)) fail("duplicate rule for " + tok[1] + "/" + tok[2]);
            if (tok[2] == "*") {
                if (!r.write) fail("wildcard rules must write");
                sys.m_write_states.insert(tok[1]);
            }
            sys.m_rules[key] = std::move(r);
        } else {
            fail("unknown directive: " + tok[0]);
        }
    }
    if (sys.m_init.size() != 2) throw ValidationError("protocol must map inputs 0 and 1 to states");

    // Totality: every read state must handle every cell symbol plus silence;
    // write states must have only the wildcard rule.
    std::set<std::string> states;
    for (const auto& [k, r] : sys.m_rules) {
        states.insert(k.first);
        if (r.next.rfind("decide=", 0) != 0 && !sys.m_rules.count({r.next, "*"})) {
            // successor must be a known state (read states appear as rule keys)
            bool known = false;
            for (const auto& [k2, r2] : sys.m_rules)
                if (k2.first == r.next) known = true;
            if (!known) throw ValidationError("rule successor unknown state: " + r.next);
        }
    }
    for (const auto& st : states) {
        if (sys.m_write_states.count(st)) continue;
        for (const auto& sym : sys.m_symbols)
            if (!sys.m_rules.count({st, sym}))
                throw ValidationError("read state " + st + " lacks a rule for symbol " + sym);
        if (!sys.m_rules.count({st, "silence"}))
            throw ValidationError("read state " + st + " lacks a silence rule");
        if (sys.m_rules.count({st, "*"}))
            throw ValidationError("state " + st + " mixes wildcard and symbol rules");
    }
    return sys;
}

TableSystem TableSystem::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open protocol file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool TableSystem::is_write_state(const std::string& state) const {
    return m_write_states.count(state) > 0;
}

const TableSystem::Rule& TableSystem::rule_for(const std::string& state,
                                               const std::string& symbol) const {
    auto it = m_rules.find({state, symbol});
    if (it == m_rules.end())
        throw ValidationError("no rule for state " + state + " symbol " + symbol);
    return it->second;
}

Configuration TableSystem::initial(const std::vector<int>& inputs) const {
    if (inputs.size() != 2) throw ValidationError("two inputs required");
    Configuration c;
    for (int v : inputs) {
        auto it = m_init.find(v);
        if (it == m_init.end()) throw ValidationError("no initial state for input");
        c.process_states.push_back(it->second);
    }
    c.shared_cells = {"-", "-"};
    c.crashed = {false, false};
    c.in_flight = {Flight{"tok", 0, 0}, Flight{"tok", 1, 0}};
    c.normalize();
    return c;
}

std::optional<int> TableSystem::decision(const Configuration& c, int pid) const {
    const auto& st = c.process_states[static_cast<std::size_t>(pid)];
    if (st == "decide=0") return 0;
    if (st == "decide=1") return 1;
    return std::nullopt;
}

Configuration TableSystem::deliver_impl(const Configuration& c, std::size_t flight_index,
                                        bool feed_silence) const {
    if (flight_index >= c.in_flight.size()) throw ValidationError("flight index out of range");
    const int p = c.in_flight[flight_index].destination;
    Configuration out = c;
    out.in_flight.erase(out.in_flight.begin() + static_cast<std::ptrdiff_t>(flight_index));
    out.now += 1;

    const std::string& state = out.process_states[static_cast<std::size_t>(p)];
    const Rule* rule;
    if (is_write_state(state)) {
        rule = &rule_for(state, "*");
        out.shared_cells[static_cast<std::size_t>(p)] = *rule->write;
    } else {
        const std::string symbol =
            feed_silence ? "silence" : out.shared_cells[static_cast<std::size_t>(1 - p)];
        rule = &rule_for(state, symbol);
    }
    out.process_states[static_cast<std::size_t>(p)] = rule->next;
    if (rule->next.rfind("decide=", 0) != 0)
        out.in_flight.push_back(Flight{"tok", p, out.now});
    out.normalize();
    return out;
}

Configuration TableSystem::deliver(const Configuration& c, std::size_t flight_index) const {
    return deliver_impl(c, flight_index, false);
}

Configuration TableSystem::slot(const Configuration& c, std::optional<int> crash_pid) const {
    Configuration cur = c;
    // Crash takes effect at slot start; the survivor learns of it only from
    // the next slot's silence, so note who was already dead before this slot.
    std::vector<bool> dead_before = c.crashed;
    if (crash_pid) cur.crashed[static_cast<std::size_t>(*crash_pid)] = true;

    // Write phase then read phase, process order; reads never write cells, so
    // sequential application equals the boundary-consistent snapshot.
    for (int phase = 0; phase < 2; ++phase) {
        for (int p = 0; p < 2; ++p) {
            if (cur.crashed[static_cast<std::size_t>(p)]) continue;
            const std::string& st = cur.process_states[static_cast<std::size_t>(p)];
            if (st.rfind("decide=", 0) == 0) continue;
            const bool want_write = phase == 0;
            if (is_write_state(st) != want_write) continue;
            std::optional<std::size_t> idx;
            for (std::size_t i = 0; i < cur.in_flight.size(); ++i)
                if (cur.in_flight[i].destination == p) idx = i;
            if (!idx) continue;
            cur = deliver_impl(cur, *idx, dead_before[static_cast<std::size_t>(1 - p)]);
        }
    }
    return cur;
}

// ---------------------------------------------------------------------------
// SwapSystem

Configuration SwapSystem::initial(const std::vector<int>& inputs) const {
    if (inputs.size() != 2) throw ValidationError("two inputs required");
    Configuration c;
    for (int v : inputs) c.process_states.push_back("offer=" + std::to_string(v));
    c.crashed = {false, false};
    return c;
}

Configuration SwapSystem::deliver(const Configuration&, std::size_t) const {
    throw SchedulerViolation("swap consensus resolves only at slot boundaries");
}

std::optional<int> SwapSystem::decision(const Configuration& c, int pid) const {
    const auto& st = c.process_states[static_cast<std::size_t>(pid)];
    if (st.rfind("decide=", 0) == 0) return st[7] - '0';
    return std::nullopt;
}

Configuration SwapSystem::slot(const Configuration& c, std::optional<int> crash_pid) const {
    Configuration out = c;
    const std::vector<bool> dead_before = c.crashed;
    if (crash_pid) out.crashed[static_cast<std::size_t>(*crash_pid)] = true;
    out.now += 1;

    auto offer_of = [&](int p) { return out.process_states[static_cast<std::size_t>(p)].substr(6); };

    const bool a_live = !out.crashed[0], b_live = !out.crashed[1];
    const bool a_open = a_live && !decision(out, 0), b_open = b_live && !decision(out, 1);

    if (a_open && dead_before[1]) {
        // Peer silent for a full slot: NegativeDefinitive, decide own input.
        out.process_states[0] = "decide=" + offer_of(0);
        return out;
    }
    if (b_open && dead_before[0]) {
        out.process_states[1] = "decide=" + offer_of(1);
        return out;
    }
    if (crash_pid) return out;  // this slot aborts; both ends see the abort

    if (a_open && b_open) {
        // Committed swap: both registers hold both offers; the lower process
        // id's value is the decision.
        const std::string v = offer_of(0);
        out.process_states[0] = "decide=" + v;
        out.process_states[1] = "decide=" + v;
    }
    return out;
}

}  // namespace bisync::timing
