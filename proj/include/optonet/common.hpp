// Shared plumbing: error categories, deterministic RNG, small text helpers.
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace optonet {

// Error categories map onto distinct process exit codes in the CLI.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Numerical integration diverged (non-finite state); usually dt too large.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitIo = 3,
    kExitNumeric = 4,
    kExitFailure = 1,
};

// Deterministic RNG. mt19937_64 plus our own distribution mapping so that
// streams are identical across platforms and standard-library versions.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // uniform integer in [0, n), n > 0; rejection-free modulo is fine here
    // because n is tiny relative to 2^64.
    std::size_t next_index(std::size_t n) {
        return static_cast<std::size_t>(engine_() % static_cast<std::uint64_t>(n));
    }

    // Derive an independent child stream; splitmix-style mixing so nearby
    // labels give unrelated seeds.
    Rng child(std::uint64_t label) const {
        std::uint64_t z = seed_mix_ + 0x9e3779b97f4a7c15ULL * (label + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

    // Remember the construction seed so child() is reproducible regardless of
    // how much of the parent stream has been consumed.
    static Rng with_root(std::uint64_t seed) {
        Rng r(seed);
        r.seed_mix_ = seed;
        return r;
    }

  private:
    std::mt19937_64 engine_;
    std::uint64_t seed_mix_ = 0;
};

// FNV-1a 64-bit; used for dataset digests. Not cryptographic, just stable.
class Fnv1a {
  public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            hash_ ^= p[i];
            hash_ *= 0x100000001b3ULL;
        }
    }
    void update_u64(std::uint64_t v) { update(&v, sizeof v); }
    std::uint64_t value() const { return hash_; }
    std::string hex() const;

  private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string format_double(double v);  // shortest round-trip representation

std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);

// Levenshtein distance; used for "did you mean" config errors.
std::size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace optonet
