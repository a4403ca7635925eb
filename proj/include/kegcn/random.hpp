#pragma once

#include "kegcn/numerics.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace kegcn {

/// Seeded sample stream. The bit generator is std::mt19937_64, whose output
/// sequence is fixed by the C++ standard; all transforms on top of it
/// (uniform doubles, bounded integers, normals) are implemented here rather
/// than via <random> distributions, whose algorithms are implementation-defined.
/// Single consumer: do not share one source between concurrent tasks.
class RandomSource {
public:
    static constexpr std::string_view algorithm = "mt19937_64+polar/v1";

    explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n); n must be positive.
    std::size_t index(std::size_t n);
    bool coin() { return (next_u64() >> 63) != 0; }
    /// Standard normal via the Marsaglia polar method.
    double normal();

    /// Child stream for an independent sub-task; deterministic in the parent state.
    RandomSource fork() { return RandomSource(next_u64()); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Samples N(0, sigma^2) with sigma = 1 / sqrt(cols), resampling anything
/// outside +/- 2 sigma.
Tensor truncated_normal_fill(std::size_t rows, std::size_t cols, RandomSource& source);

/// Same, with an explicit sigma.
Tensor truncated_normal_fill(std::size_t rows, std::size_t cols, double sigma,
                             RandomSource& source);

} // namespace kegcn
