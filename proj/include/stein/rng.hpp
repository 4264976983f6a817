#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace stein {

/// Deterministic random source. All distributions are implemented on top of
/// raw mt19937_64 output so that streams are bit-reproducible across
/// platforms and standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t uniform_int(std::uint64_t n);

    /// Standard normal via the Marsaglia polar method (second value cached).
    double normal();

    /// Gamma(shape, 1) via Marsaglia-Tsang squeeze; shape < 1 handled by the
    /// Gamma(shape + 1) boost.
    double gamma(double shape);

private:
    std::mt19937_64 gen_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// Stable 64-bit stream derivation for (master seed, method, N, seed index)
/// cells: FNV-1a over the canonical key bytes, finished with a splitmix64
/// mix. Independent of execution order and platform.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t n, std::uint64_t seed_index);

/// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace stein
