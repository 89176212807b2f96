#include "dropinj/synthetic.hpp"

#include <cmath>

#include "dropinj/rng.hpp"

namespace dropinj {

Dataset make_linear_task(Index n, double slope, double noise_sd, Seed seed)
{
    Stream rng(seed);
    Dataset d;
    d.name = "linear";
    d.features.resize(n, 1);
    d.targets.resize(n);
    for (Index i = 0; i < n; ++i) {
        const double x = rng.uniform(-1.0, 1.0);
        d.features(i, 0) = x;
        d.targets[i] = slope * x + noise_sd * rng.normal();
    }
    return d;
}

Dataset make_concrete_like(Index n, Seed seed)
{
    Stream rng(seed);
    Dataset d;
    d.name = "concrete_like";
    d.feature_names = {"cement", "slag", "ash", "water", "superplasticizer", "coarse", "fine", "age"};
    d.features.resize(n, 8);
    d.targets.resize(n);
    static constexpr double ages[] = {3, 7, 14, 28, 56, 90, 180, 365};
    for (Index i = 0; i < n; ++i) {
        const double cement = rng.uniform(100, 540);
        const double slag = rng.bernoulli(0.5) ? rng.uniform(0, 360) : 0.0;
        const double ash = rng.bernoulli(0.45) ? rng.uniform(0, 200) : 0.0;
        const double water = rng.uniform(120, 250);
        const double sp = rng.bernoulli(0.6) ? rng.uniform(0, 32) : 0.0;
        const double coarse = rng.uniform(800, 1150);
        const double fine = rng.uniform(590, 995);
        const double age = ages[rng.below(8)];
        const double binder = cement + 0.6 * slag + 0.3 * ash;
        const double wb = water / binder;
        const double strength = 85.0 * std::exp(-1.6 * wb) * std::log1p(age) / std::log1p(28.0)
                                + 0.25 * sp + 0.004 * (coarse - 975.0) - 0.006 * (fine - 790.0);
        d.features.row(i) << cement, slag, ash, water, sp, coarse, fine, age;
        d.targets[i] = strength + 3.0 * rng.normal();
    }
    return d;
}

} // namespace dropinj
