#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace fedbip {

// SplitMix64 finalizer. Bijective; used to mix seed material.
std::uint64_t mix64(std::uint64_t x);

// Deterministic seed fan-out. One master seed plus a stream label and up to
// two integer coordinates (round, client, cluster, ...) identify an
// independent stream. Changing this scheme breaks replay of old runs.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// Deterministic random source: mt19937_64 plus hand-rolled distributions.
// The standard distributions are implementation-defined, so we avoid them to
// keep identical seeds producing identical streams everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller, one spare cached.
    double normal();

    // Uniform in [0, n); rejection sampling, no modulo bias.
    std::size_t below(std::size_t n);

    // Fisher-Yates permutation of [0, n).
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Key mapping doubles onto the IEEE-754 total order, so sorting by key is a
// strict total order even across ±0 and NaN payloads.
std::uint64_t total_order_key(double x);

// Sum with the terms first sorted into total order. The result depends only
// on the multiset of inputs, never on their arrangement, which is what makes
// client-indexed reductions invariant under client permutation.
double stable_sum(std::span<double> terms);

}  // namespace fedbip
