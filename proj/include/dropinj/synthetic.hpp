#pragma once

#include "dropinj/dataset.hpp"
#include "dropinj/types.hpp"

namespace dropinj {

/// x ~ U(-1, 1), y = slope * x + N(0, noise_sd^2).
Dataset make_linear_task(Index n, double slope, double noise_sd, Seed seed);

/// The reference 1D task: y = 3x with noise sd 0.05.
inline constexpr double kLinearTaskSlope = 3.0;
inline constexpr double kLinearTaskNoise = 0.05;

inline Dataset make_linear_task(Index n, Seed seed)
{
    return make_linear_task(n, kLinearTaskSlope, kLinearTaskNoise, seed);
}

/// Eight mix-design style features with a nonlinear strength-like target,
/// a stand-in for the Concrete regression benchmark.
Dataset make_concrete_like(Index n, Seed seed);

} // namespace dropinj
