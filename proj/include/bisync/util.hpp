#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bisync {

// A precondition or input failed validation (bad parameters, malformed files).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An exhaustive analysis hit a configured ceiling (state count, node budget).
struct AnalysisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The simulation itself is inconsistent (e.g. a slot entered with a mixed
// register pair). Indicates a bug in the harness, not an injected fault.
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A schedule step that the active timing model forbids.
struct SchedulerViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string to_hex16(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r' || s[a] == '\n')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r' || s[b - 1] == '\n')) --b;
    return std::string(s.substr(a, b - a));
}

template <typename It>
std::string join(It begin, It end, std::string_view sep) {
    std::ostringstream out;
    bool first = true;
    for (It it = begin; it != end; ++it) {
        if (!first) out << sep;
        out << *it;
        first = false;
    }
    return out.str();
}

}  // namespace bisync
