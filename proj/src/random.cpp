#include "kegcn/random.hpp"

#include "kegcn/errors.hpp"

#include <cmath>

namespace kegcn {

double RandomSource::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t RandomSource::index(std::size_t n) {
    if (n == 0) throw ContractError("RandomSource::index: empty range");
    const std::uint64_t bound = n;
    // Reject the tail so every residue is equally likely.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
    std::uint64_t x = next_u64();
    while (x > limit) x = next_u64();
    return static_cast<std::size_t>(x % bound);
}

double RandomSource::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
}

Tensor truncated_normal_fill(std::size_t rows, std::size_t cols, RandomSource& source) {
    if (rows == 0 || cols == 0) throw DimensionError("truncated_normal_fill: empty shape");
    return truncated_normal_fill(rows, cols, 1.0 / std::sqrt(static_cast<double>(cols)), source);
}

Tensor truncated_normal_fill(std::size_t rows, std::size_t cols, double sigma,
                             RandomSource& source) {
    Tensor out(rows, cols);
    for (double& x : out.values()) {
        double z = source.normal();
        while (std::abs(z) > 2.0) z = source.normal();
        x = sigma * z;
    }
    return out;
}

} // namespace kegcn
