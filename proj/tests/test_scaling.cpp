#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dropinj/rng.hpp"
#include "dropinj/scaling.hpp"

using namespace dropinj;

namespace {

VectorXd vec(std::initializer_list<double> v)
{
    VectorXd out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double d : v) out[i++] = d;
    return out;
}

struct Sample {
    VectorXd y, mu, var;
    VectorXd sq() const { return (y - mu).array().square().matrix(); }
};

// y ~ Normal(mu, ratio * var): the given variances are off by `ratio`.
Sample gaussian_sample(Index n, double ratio, Seed seed)
{
    Stream rng(seed);
    Sample s{VectorXd(n), VectorXd(n), VectorXd(n)};
    for (Index i = 0; i < n; ++i) {
        s.mu[i] = rng.uniform(-2, 2);
        s.var[i] = std::exp(rng.uniform(-4, 1));
        s.y[i] = s.mu[i] + std::sqrt(ratio * s.var[i]) * rng.normal();
    }
    return s;
}

// Most residuals far smaller than the variance, a few far larger.
Sample heavy_tailed_sample(Index n, Seed seed)
{
    Stream rng(seed);
    Sample s{VectorXd(n), VectorXd(n), VectorXd(n)};
    for (Index i = 0; i < n; ++i) {
        s.mu[i] = rng.uniform(-2, 2);
        s.var[i] = std::exp(rng.uniform(-3, 0));
        const double k = rng.uniform() < 0.9 ? 0.25 : 20.0;
        s.y[i] = s.mu[i] + std::sqrt(k * s.var[i]) * rng.normal();
    }
    return s;
}

std::vector<Index> argsort(const VectorXd& v)
{
    std::vector<Index> idx(static_cast<std::size_t>(v.size()));
    std::iota(idx.begin(), idx.end(), Index(0));
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return v[a] < v[b]; });
    return idx;
}

double ma_at(const Sample& s, double c)
{
    return miscalibration_area(calibration_curve(s.y, s.mu, apply_scale(s.var, c)));
}

} // namespace

TEST_CASE("ideal_uncertainty examples")
{
    CHECK(ideal_uncertainty(vec({1, 2}), vec({0, 4})) == vec({1, 4}));
    CHECK(ideal_uncertainty(vec({1, 2}), vec({1, 2})).isZero(0.0));
    Stream rng(3);
    VectorXd y(200), p(200);
    for (Index i = 0; i < 200; ++i) {
        y[i] = rng.uniform(-5, 5);
        p[i] = rng.uniform(-5, 5);
    }
    const auto e = ideal_uncertainty(y, p);
    for (Index i = 0; i < 200; ++i) CHECK(e[i] == (y[i] - p[i]) * (y[i] - p[i]));
    CHECK_THROWS_AS(ideal_uncertainty(vec({1}), vec({1, 2})), InputShapeError);
}

TEST_CASE("optimal_scale examples")
{
    const VectorXd e = vec({0.3, 2.0, 5.5});
    const auto one = optimal_scale(e, e);
    CHECK(one.factor == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(one.nll_scaled == doctest::Approx(one.nll_unscaled).epsilon(1e-15));

    const auto two = optimal_scale(vec({2, 8}), vec({1, 4}));
    CHECK(two.factor == 2.0);
    CHECK(two.nll_unscaled == doctest::Approx(0.5 * (0.5 * 2 + 0.5 * 8 / 4.0 + 0.5 * std::log(4.0))));
    CHECK(two.nll_scaled < two.nll_unscaled);

    CHECK_THROWS_AS(optimal_scale(VectorXd(0), VectorXd(0)), EmptyDataError);
    CHECK_THROWS_AS(optimal_scale(vec({0, 0}), vec({1, 1})), DomainError);
}

TEST_CASE("optimal_scale agrees with a dense grid search")
{
    for (Seed seed = 0; seed < 3; ++seed) {
        Stream rng(seed);
        VectorXd sq(1000), var(1000);
        for (Index i = 0; i < 1000; ++i) {
            sq[i] = std::exp(rng.uniform(-5, 2));
            var[i] = std::exp(rng.uniform(-5, 2));
        }
        const double C = optimal_scale(sq, var).factor;
        const double lo = C / 10;
        const double hi = 10 * C;
        const int points = 10000;
        const double step = (hi - lo) / (points - 1);
        double best_c = lo;
        double best = INFINITY;
        for (int k = 0; k < points; ++k) {
            const double c = lo + step * k;
            const double v = gaussian_nll_sq(sq, (var * c).eval());
            if (v < best) {
                best = v;
                best_c = c;
            }
        }
        CHECK(std::abs(best_c - C) <= step);
        CHECK(optimal_scale(sq, var).nll_scaled <= best + 1e-12);
    }
}

TEST_CASE("optimal_scale floors variances before dividing")
{
    const auto r = optimal_scale(vec({1e-12, 1.0}), vec({0.0, 1.0}));
    CHECK(r.factor == doctest::Approx(1.0));
    CHECK(std::isfinite(r.nll_unscaled));
}

TEST_CASE("apply_scale examples")
{
    const VectorXd v = vec({1, 2, 3});
    CHECK(apply_scale(v, 1.0) == v);
    CHECK(apply_scale(v, 2.0) == vec({2, 4, 6}));
    CHECK_THROWS_AS(apply_scale(v, 0.0), DomainError);
    CHECK_THROWS_AS(apply_scale(v, -1.0), DomainError);
    CHECK_THROWS_AS(apply_scale(v, INFINITY), DomainError);
}

TEST_CASE("apply_scale preserves the ordering of variances")
{
    Stream rng(9);
    for (int t = 0; t < 50; ++t) {
        VectorXd v(100);
        for (Index i = 0; i < 100; ++i) v[i] = std::exp(rng.uniform(-10, 10));
        const double c = std::exp(rng.uniform(-20, 20));
        CHECK(argsort(apply_scale(v, c)) == argsort(v));
    }
}

TEST_CASE("bracket_scale on overconfident data")
{
    const auto s = gaussian_sample(2000, 4.0, 1);
    CHECK(balance_at_scale(s.y, s.mu, s.var, 1.0, 99) < 0.0);
    const auto b = bracket_scale(s.y, s.mu, s.var, 1.0);
    CHECK(b.low == 1.0);
    CHECK(balance_at_scale(s.y, s.mu, s.var, b.low, 99) < 0.0);
    CHECK(balance_at_scale(s.y, s.mu, s.var, b.high, 99) > 0.0);
    // expansion is by powers of two from the start
    CHECK(std::log2(b.high) == doctest::Approx(std::round(std::log2(b.high))));
}

TEST_CASE("bracket_scale reports the constant sign when no bracket exists")
{
    const VectorXd y = vec({1, 2, 3});
    try {
        (void)bracket_scale(y, y, vec({1, 1, 1}), 1.0);
        FAIL("expected NoBracketError");
    } catch (const NoBracketError& e) {
        CHECK(e.sign() == +1);
    }
    try {
        (void)bracket_scale(y, vec({0, 0, 0}), vec({0, 0, 0}), 1.0);
        FAIL("expected NoBracketError");
    } catch (const NoBracketError& e) {
        CHECK(e.sign() == -1);
    }
    CHECK_THROWS_AS(bracket_scale(y, y, vec({1, 1, 1}), 0.0), DomainError);
}

TEST_CASE("bracket_scale straddles C on balanced data")
{
    const auto s = gaussian_sample(4000, 1.0, 2);
    const double C = optimal_scale(s.sq(), s.var).factor;
    const auto b = bracket_scale(s.y, s.mu, s.var, C);
    CHECK(b.low <= C);
    CHECK(b.high >= C);
    CHECK(b.high / b.low <= 4.0);
}

TEST_CASE("relax_scale recovers the true variance ratio")
{
    for (double ratio : {4.0, 1.0, 0.25}) {
        const auto s = gaussian_sample(5000, ratio, 3);
        const double C = optimal_scale(s.sq(), s.var).factor;
        const auto b = bracket_scale(s.y, s.mu, s.var, C);
        const auto r = relax_scale(s.y, s.mu, s.var, b, 0.01);
        CHECK(std::abs(r.factor_relaxed / ratio - 1.0) < 0.2);
        CHECK(std::abs(r.final_balance) < 0.01);
        CHECK(r.final_balance == doctest::Approx(balance_at_scale(s.y, s.mu, s.var, r.factor_relaxed, 99)));
        CHECK(r.iterations >= 1);
        CHECK(r.iterations <= kMaxRelaxIterations);
        CHECK(r.tolerance == 0.01);
    }
}

TEST_CASE("relax_scale rejects invalid brackets and tolerances")
{
    const auto s = gaussian_sample(500, 4.0, 4);
    const auto good = bracket_scale(s.y, s.mu, s.var, 1.0);
    // Balance at a huge factor is positive, so using it as the low end is invalid
    CHECK_THROWS_AS(relax_scale(s.y, s.mu, s.var, ScaleBracket{good.high, good.high * 2}), ValidationError);
    CHECK_THROWS_AS(relax_scale(s.y, s.mu, s.var, ScaleBracket{good.low / 4, good.low / 2}), ValidationError);
    CHECK_THROWS_AS(relax_scale(s.y, s.mu, s.var, ScaleBracket{good.high, good.low}), ValidationError);
    CHECK_THROWS_AS(relax_scale(s.y, s.mu, s.var, good, 0.0), ValidationError);
}

TEST_CASE("relax_scale reports a convergence failure on an unreachable tolerance")
{
    // Three points: Balance jumps in steps of at least 1/3 per point, so a
    // tiny tolerance cannot be met away from an exact zero.
    const VectorXd y = vec({1, 2, 3});
    const VectorXd mu = vec({0, 0, 0});
    const VectorXd var = vec({1, 1, 1});
    const auto b = bracket_scale(y, mu, var, 1.0);
    try {
        (void)relax_scale(y, mu, var, b, 1e-9);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(std::abs(e.last_balance()) >= 1e-9);
    }
}

TEST_CASE("property: C minimises NLL over a dense grid of factors")
{
    Stream rng(21);
    for (int t = 0; t < 10; ++t) {
        VectorXd sq(300), var(300);
        for (Index i = 0; i < 300; ++i) {
            sq[i] = std::exp(rng.uniform(-6, 2));
            var[i] = std::exp(rng.uniform(-6, 2));
        }
        const auto r = optimal_scale(sq, var);
        for (int k = -300; k <= 300; ++k) {
            const double c = r.factor * std::exp(k / 50.0);
            CHECK(gaussian_nll_sq(sq, (var * c).eval()) >= r.nll_scaled - 1e-12);
        }
    }
}

TEST_CASE("property: Balance is non-decreasing in the scale factor")
{
    for (Seed seed = 0; seed < 5; ++seed) {
        const auto s = gaussian_sample(500, std::exp(double(seed) - 2), seed + 30);
        double prev = -2;
        for (int k = -200; k <= 200; ++k) {
            const double b = balance_at_scale(s.y, s.mu, s.var, std::exp(k / 20.0), 99);
            CHECK(b >= prev);
            prev = b;
        }
    }
}

TEST_CASE("property: bisection keeps Balance(low) < 0 < Balance(high) at every step")
{
    for (Seed seed = 0; seed < 5; ++seed) {
        const auto s = seed % 2 ? heavy_tailed_sample(1500, seed) : gaussian_sample(1500, 3.0, seed);
        const double C = optimal_scale(s.sq(), s.var).factor;
        const auto b = bracket_scale(s.y, s.mu, s.var, C);
        std::vector<ScaleBracket> trace;
        const auto r = relax_scale(s.y, s.mu, s.var, b, 0.001, 99, &trace);
        CHECK(trace.size() == r.iterations);
        for (const auto& t : trace) {
            CHECK(t.low < t.high);
            CHECK(balance_at_scale(s.y, s.mu, s.var, t.low, 99) < 0.0);
            CHECK(balance_at_scale(s.y, s.mu, s.var, t.high, 99) > 0.0);
        }
    }
}

TEST_CASE("property: relaxation is consistent under pre-scaled variances")
{
    const auto s = gaussian_sample(3000, 2.5, 40);
    const double C = optimal_scale(s.sq(), s.var).factor;
    const auto r = relax_scale(s.y, s.mu, s.var, bracket_scale(s.y, s.mu, s.var, C), 0.01);

    // Power-of-two pre-scaling is exact in binary floating point: identical path.
    const VectorXd v4 = s.var * 4.0;
    const double C4 = optimal_scale(s.sq(), v4).factor;
    const auto r4 = relax_scale(s.y, s.mu, v4, bracket_scale(s.y, s.mu, v4, C4), 0.01);
    CHECK(r4.factor_relaxed * 4.0 == doctest::Approx(r.factor_relaxed).epsilon(1e-12));

    // General k: both land inside the same |Balance| < tau plateau region.
    const VectorXd v3 = s.var * 3.0;
    const double C3 = optimal_scale(s.sq(), v3).factor;
    const auto r3 = relax_scale(s.y, s.mu, v3, bracket_scale(s.y, s.mu, v3, C3), 0.01);
    CHECK(std::abs(r3.factor_relaxed * 3.0 / r.factor_relaxed - 1.0) < 0.05);
    CHECK(std::abs(balance_at_scale(s.y, s.mu, s.var, r3.factor_relaxed * 3.0, 99)) < 0.011);
}

TEST_CASE("property: relaxation lowers miscalibration area when C is unbalanced")
{
    for (Seed seed = 0; seed < 5; ++seed) {
        const auto s = heavy_tailed_sample(3000, seed + 50);
        const double C = optimal_scale(s.sq(), s.var).factor;
        REQUIRE(std::abs(balance_at_scale(s.y, s.mu, s.var, C, 99)) > 0.01);
        const auto r = relax_scale(s.y, s.mu, s.var, bracket_scale(s.y, s.mu, s.var, C), 0.01);
        CHECK(ma_at(s, r.factor_relaxed) <= ma_at(s, C));
    }
    for (Seed seed = 0; seed < 3; ++seed) {
        const auto s = gaussian_sample(3000, 6.0, seed + 60);
        const double one = 1.0;
        REQUIRE(std::abs(balance_at_scale(s.y, s.mu, s.var, one, 99)) > 0.01);
        const auto r = relax_scale(s.y, s.mu, s.var, bracket_scale(s.y, s.mu, s.var, one), 0.01);
        CHECK(ma_at(s, r.factor_relaxed) <= ma_at(s, one));
    }
}
