// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mocsim {

// Simulated time in integer picoseconds. Integer time keeps multi-clock
// schedules exact; no floating-point drift between domains.
using Tick = std::uint64_t;

constexpr Tick kPicosPerSecond = 1'000'000'000'000ULL;

// Period of an f-MHz clock in picoseconds.
inline Tick period_ps_from_mhz(int frequency_mhz) {
    double p = 1e6 / static_cast<double>(frequency_mhz);
    return static_cast<Tick>(p + 0.5);
}

// One named problem found by a validator or parser. line < 0 means the
// issue is not tied to a file location.
struct Issue {
    std::string code;
    std::string message;
    int line = -1;

    std::string to_string() const {
        std::string s = code;
        if (line >= 0) {
            s += " (line " + std::to_string(line) + ")";
        }
        s += ": " + message;
        return s;
    }
};

// Result of a validating operation: value present iff issues is empty.
// Validators report every violation, not just the first.
template <typename T>
struct Parsed {
    std::optional<T> value;
    std::vector<Issue> issues;

    bool ok() const { return issues.empty() && value.has_value(); }
    const T& operator*() const { return *value; }
    T& operator*() { return *value; }
    const T* operator->() const { return &*value; }
    T* operator->() { return &*value; }

    std::string issues_text() const {
        std::string s;
        for (const auto& i : issues) {
            s += i.to_string();
            s += '\n';
        }
        return s;
    }
};

// Hard violation of a simulator invariant or protocol. These indicate a
// bug in the caller (or in the simulator itself), not a bad input file.
class SimError : public std::runtime_error {
public:
    SimError(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

inline std::uint64_t ceil_div_u64(std::uint64_t a, std::uint64_t b) {
    return (a + b - 1) / b;
}

// Smallest n with 2^n >= v. ceil_log2(1) == 0.
inline unsigned ceil_log2(std::uint64_t v) {
    unsigned n = 0;
    std::uint64_t p = 1;
    while (p < v) {
        p <<= 1;
        ++n;
    }
    return n;
}

// splitmix64. Hand-rolled so event streams are bit-identical across
// platforms; the standard distributions make no such promise.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, n). Modulo bias is < 2^-32 for the small n used here.
    std::uint64_t next_below(std::uint64_t n) {
        return n == 0 ? 0 : next_u64() % n;
    }

    bool chance(double p) { return next_double() < p; }

    // Derive an independent stream (e.g. one per IP).
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        SplitMix64 s(seed ^ (stream * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL));
        return s.next_u64();
    }

private:
    std::uint64_t state_;
};

// Deterministic fixed-point formatting for CSV artifacts.
inline std::string format_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

}  // namespace mocsim
