#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <initializer_list>
#include <random>

#include "dropinj/types.hpp"

namespace dropinj {

/// Purpose tags keep streams derived from the same base seed disjoint.
enum class StreamTag : std::uint64_t {
    init = 1,
    shuffle = 2,
    train_mask = 3,
    mc_pass = 4,
    split = 5,
    rate = 6,
    repeat = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Folds (base, tag, keys...) into one seed. Order-sensitive.
inline Seed derive_seed(Seed base, StreamTag tag, std::initializer_list<std::uint64_t> keys = {})
{
    std::uint64_t h = splitmix64(base ^ 0x5851f42d4c957f2dULL);
    h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
    for (auto k : keys) h = splitmix64(h ^ k);
    return h;
}

/// A seeded random stream. Draws are defined bit-for-bit here rather than
/// through <random> distributions, whose outputs are implementation-defined.
class Stream {
public:
    explicit Stream(Seed seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n), n > 0 (rejection sampling, unbiased).
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    /// Standard normal draw (Box-Muller, one value per call).
    double normal()
    {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// True with probability p.
    bool bernoulli(double p) { return uniform() < p; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace dropinj
