#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace nll {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Errors. Each condition the library treats as a distinct failure mode gets
// its own type so callers (and tests) can tell them apart.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad argument values: out-of-range parameters, unknown identifiers, etc.
struct InputError : Error {
    using Error::Error;
};

// A signal with zero likelihood under both states.
struct DegenerateSignalError : Error {
    using Error::Error;
};

// Bayes update with numerator and denominator both zero (p=1,b=0 or p=0,b=1).
struct UndefinedPosteriorError : Error {
    using Error::Error;
};

// Prior formation asked for an empty history.
struct EmptyHistoryError : Error {
    using Error::Error;
};

// Tabular prior rule has no entry for the requested (m,k).
struct MissingEntryError : Error {
    using Error::Error;
};

// A proportion-only urn function was requested for a prior rule whose value
// depends on the raw counts, not just on k/(m+k).
struct NotSizeInvariantError : Error {
    using Error::Error;
};

// Pathwise ordering broke during a coupled simulation.
struct CouplingViolatedError : Error {
    CouplingViolatedError(const std::string& msg, std::size_t step_)
        : Error(msg), step(step_) {}
    std::size_t step;
};

// A heterogeneous model sequence fails its declared informativeness bound.
struct InformativenessError : Error {
    using Error::Error;
};

// Exact enumeration asked for a horizon beyond the supported limit.
struct EnumerationLimitError : Error {
    using Error::Error;
};

// Config file parsing / validation failures (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Random streams.
//
// All randomness flows through mt19937_64 seeded from a 64-bit value, with
// uniforms produced by the 53-bit mantissa trick so draws are identical
// across platforms and standard libraries. Independent streams (one per
// trial, one per sweep cell) are derived from the master seed with
// splitmix64 over a golden-ratio offset; the mixing function name is
// recorded in run metadata.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr const char* kStreamMixingFunction = "splitmix64";

// Seed for the i-th independent substream of a master seed.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master + 0x9E3779B97F4A7C15ULL * (index + 1));
}

class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::uint64_t bits() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

}  // namespace nll
