#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dropinj/metrics.hpp"
#include "dropinj/rng.hpp"

using namespace dropinj;

namespace {

// erf by its Maclaurin series in long double; fine for |x| <= 6.
long double erf_series(long double x)
{
    long double term = x;
    long double sum = x;
    for (int n = 1; n < 400; ++n) {
        term *= -x * x / n;
        const long double add = term / (2 * n + 1);
        sum += add;
        if (std::fabs(add) < 1e-30L) break;
    }
    return sum * 2.0L / std::sqrt(3.14159265358979323846264338327950288L);
}

// Solve P(|Z| <= z) = alpha by bisection on the series above.
double z_oracle(double alpha)
{
    long double lo = 0.0L;
    long double hi = 6.0L;
    for (int i = 0; i < 200; ++i) {
        const long double mid = 0.5L * (lo + hi);
        if (erf_series(mid / std::sqrt(2.0L)) < alpha) lo = mid;
        else hi = mid;
    }
    return double(0.5L * (lo + hi));
}

VectorXd vec(std::initializer_list<double> v)
{
    VectorXd out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double d : v) out[i++] = d;
    return out;
}

struct GaussianSample {
    VectorXd y, mu, var;
};

GaussianSample calibrated_sample(Index n, Seed seed)
{
    Stream rng(seed);
    GaussianSample s{VectorXd(n), VectorXd(n), VectorXd(n)};
    for (Index i = 0; i < n; ++i) {
        s.mu[i] = rng.uniform(-5, 5);
        s.var[i] = std::exp(rng.uniform(-3, 2));
        s.y[i] = s.mu[i] + std::sqrt(s.var[i]) * rng.normal();
    }
    return s;
}

CalibrationCurve random_curve(std::size_t m, Seed seed)
{
    Stream rng(seed);
    CalibrationCurve c;
    c.alphas = uniform_alpha_grid(m);
    std::vector<double> obs(m);
    for (auto& o : obs) o = rng.uniform();
    std::sort(obs.begin(), obs.end());
    c.observed = obs;
    return c;
}

} // namespace

TEST_CASE("rmse examples")
{
    CHECK(rmse(vec({1, 2}), vec({1, 2})) == 0.0);
    CHECK(rmse(vec({0, 0}), vec({3, 4})) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
    CHECK_THROWS_AS(rmse(VectorXd(0), VectorXd(0)), EmptyDataError);
    CHECK_THROWS_AS(rmse(vec({1}), vec({1, 2})), InputShapeError);
}

TEST_CASE("rmse matches a naive loop")
{
    Stream rng(1);
    VectorXd y(100), p(100);
    for (Index i = 0; i < 100; ++i) {
        y[i] = rng.uniform(-10, 10);
        p[i] = rng.uniform(-10, 10);
    }
    long double s = 0;
    for (Index i = 0; i < 100; ++i) s += (long double)(y[i] - p[i]) * (y[i] - p[i]);
    CHECK(std::abs(rmse(y, p) - double(std::sqrt(s / 100))) < 1e-12);
}

TEST_CASE("gaussian_nll examples")
{
    CHECK(gaussian_nll(vec({1, -2, 3}), vec({1, -2, 3}), vec({1, 1, 1})) == 0.0);
    CHECK(gaussian_nll(vec({1}), vec({0}), vec({1})) == 0.5);
    CHECK(gaussian_nll(vec({2}), vec({0}), vec({4})) == doctest::Approx(1.1931471805599453).epsilon(1e-15));
    CHECK(gaussian_nll_sq(vec({4}), vec({4})) == doctest::Approx(0.5 + 0.5 * std::log(4.0)));
}

TEST_CASE("gaussian_nll clamps tiny or nonpositive variances and counts them")
{
    NllDiagnostics diag;
    const double v = gaussian_nll(vec({0, 0, 1}), vec({0, 0, 0}), vec({0.0, -1.0, 1.0}), &diag);
    CHECK(diag.floored == 2);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx((2 * 0.5 * std::log(kVarianceFloor) + 0.5) / 3));
    const double w = gaussian_nll(vec({0}), vec({0}), vec({1e-13}), &diag);
    CHECK(diag.floored == 3);
    CHECK(w == doctest::Approx(0.5 * std::log(kVarianceFloor)));
}

TEST_CASE("z_quantile: frozen reference values")
{
    CHECK(z_quantile(0.0) == 0.0);
    CHECK(std::abs(z_quantile(0.95) - 1.95996398454005386) < 1e-7);
    CHECK(std::abs(z_quantile(0.6827) - 1.00002171332299911) < 1e-7);
    CHECK(std::abs(z_quantile(0.5) - 0.674489750196081743) < 1e-7);
    CHECK(std::abs(z_quantile(0.99) - 2.5758293035489004) < 1e-7);
    CHECK_THROWS_AS(z_quantile(1.0), DomainError);
    CHECK_THROWS_AS(z_quantile(-0.1), DomainError);
    CHECK_THROWS_AS(z_quantile(std::nan("")), DomainError);
}

TEST_CASE("z_quantile agrees with a series-based inversion across (0, 1)")
{
    std::vector<double> alphas{1e-6, 1e-3, 0.999, 0.9999, 0.99999};
    for (int m = 1; m < 100; ++m) alphas.push_back(m / 100.0);
    double worst = 0;
    for (double a : alphas) worst = std::max(worst, std::abs(z_quantile(a) - z_oracle(a)));
    CHECK(worst < 1e-9);
    // the oracle itself reproduces the frozen 95% value
    CHECK(std::abs(z_oracle(0.95) - 1.95996398454005386) < 1e-12);
}

TEST_CASE("z_quantile is strictly increasing")
{
    double prev = z_quantile(0.0);
    for (int m = 1; m < 1000; ++m) {
        const double z = z_quantile(m / 1000.0);
        CHECK(z > prev);
        prev = z;
    }
}

TEST_CASE("observed_frequency examples")
{
    const VectorXd y = vec({1, 2, 3, 4});
    CHECK(observed_frequency(y, y, vec({1, 1, 1, 1}), 0.3) == 1.0);
    CHECK(observed_frequency(y, y, vec({1, 1, 1, 1}), 0.0) == 1.0);
    CHECK(observed_frequency(y, vec({1, 2.5, 3.5, 4.5}), vec({1, 1, 1, 1}), 0.0) == 0.25);
    const auto s = calibrated_sample(1000, 3);
    CHECK(observed_frequency(s.y, s.mu, s.var, 0.0) == 0.0);
}

TEST_CASE("observed_frequency: half-width is z times the standard deviation")
{
    // residual 1.9 with variance 1: inside at 95% (z = 1.96) but not at 90% (z = 1.645)
    CHECK(observed_frequency(vec({1.9}), vec({0}), vec({1}), 0.95) == 1.0);
    CHECK(observed_frequency(vec({1.9}), vec({0}), vec({1}), 0.90) == 0.0);
    // with variance 4 the standard deviation is 2, so residual 3.8 sits inside at 95%
    CHECK(observed_frequency(vec({3.8}), vec({0}), vec({4}), 0.95) == 1.0);
    CHECK(observed_frequency(vec({4.0}), vec({0}), vec({4}), 0.95) == 0.0);
}

TEST_CASE("observed_frequency on Gaussian samples")
{
    const auto s = calibrated_sample(10000, 11);
    const double p = observed_frequency(s.y, s.mu, s.var, 0.9);
    CHECK(p >= 0.88);
    CHECK(p <= 0.92);
}

TEST_CASE("calibration curve of calibrated data hugs the diagonal")
{
    const auto s = calibrated_sample(10000, 5);
    const auto c = calibration_curve(s.y, s.mu, s.var, 99);
    REQUIRE(c.size() == 99);
    double worst = 0;
    for (std::size_t m = 0; m < c.size(); ++m) {
        CHECK(c.alphas[m] == doctest::Approx((m + 1) / 100.0).epsilon(1e-15));
        worst = std::max(worst, std::abs(c.observed[m] - c.alphas[m]));
    }
    CHECK(worst < 0.03);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("calibration curve of zero residuals is identically one")
{
    const VectorXd y = vec({0.5, 1.5, -2});
    const auto c = calibration_curve(y, y, vec({0.1, 0.2, 0.3}), 20);
    for (double o : c.observed) CHECK(o == 1.0);
    CHECK_THROWS_AS(calibration_curve(y, y, vec({1, 1, 1}), 1), ValidationError);
}

TEST_CASE("observed frequency is non-decreasing in alpha on random data")
{
    for (Seed seed = 0; seed < 5; ++seed) {
        Stream rng(seed);
        VectorXd y(300), mu(300), var(300);
        for (Index i = 0; i < 300; ++i) {
            y[i] = rng.uniform(-3, 3);
            mu[i] = rng.uniform(-3, 3);
            var[i] = rng.uniform(0.01, 4);
        }
        const auto c = calibration_curve(y, mu, var, 99);
        for (std::size_t m = 1; m < c.size(); ++m) CHECK(c.observed[m] >= c.observed[m - 1]);
        CHECK_NOTHROW(c.validate());
    }
}

TEST_CASE("miscalibration area and balance examples")
{
    CalibrationCurve perfect;
    perfect.alphas = uniform_alpha_grid(99);
    perfect.observed = perfect.alphas;
    CHECK(miscalibration_area(perfect) == 0.0);
    CHECK(balance(perfect) == 0.0);

    CalibrationCurve ones = perfect;
    std::fill(ones.observed.begin(), ones.observed.end(), 1.0);
    // (1/99) sum_{m=1}^{99} (1 - m/100) = 1 - 50/100 = 0.5
    CHECK(miscalibration_area(ones) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(balance(ones) == doctest::Approx(0.5).epsilon(1e-14));

    CalibrationCurve zeros = perfect;
    std::fill(zeros.observed.begin(), zeros.observed.end(), 0.0);
    CHECK(balance(zeros) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(miscalibration_area(zeros) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("miscalibration area and balance match naive loops")
{
    for (Seed seed = 0; seed < 10; ++seed) {
        const auto c = random_curve(99, seed);
        long double a = 0;
        long double b = 0;
        for (std::size_t m = 0; m < c.size(); ++m) {
            a += std::fabs((long double)c.observed[m] - c.alphas[m]);
            b += (long double)c.observed[m] - c.alphas[m];
        }
        CHECK(std::abs(miscalibration_area(c) - double(a / 99)) < 1e-12);
        CHECK(std::abs(balance(c) - double(b / 99)) < 1e-12);
    }
}

TEST_CASE("curve validation rejects malformed curves")
{
    CalibrationCurve c;
    c.alphas = {0.2, 0.1};
    c.observed = {0.1, 0.2};
    CHECK_THROWS_AS(miscalibration_area(c), ValidationError);
    c.alphas = {0.1, 0.2};
    c.observed = {0.3, 0.2};
    CHECK_THROWS_AS(balance(c), ValidationError);
    c.observed = {0.3};
    CHECK_THROWS_AS(balance(c), ValidationError);
    c.observed = {0.3, 1.2};
    CHECK_THROWS_AS(balance(c), ValidationError);
}

TEST_CASE("property: miscalibration area bounds |balance| and both stay in range")
{
    for (Seed seed = 0; seed < 200; ++seed) {
        const auto c = random_curve(2 + seed % 150, seed);
        const double ma = miscalibration_area(c);
        const double b = balance(c);
        CHECK(ma >= std::abs(b) - 1e-15);
        CHECK(ma >= 0.0);
        CHECK(ma <= 1.0);
        CHECK(b >= -1.0);
        CHECK(b <= 1.0);
    }
}

TEST_CASE("property: per-sample NLL is minimised at the squared residual")
{
    Stream rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const double e2 = std::exp(rng.uniform(-6, 4));
        const VectorXd sq = vec({e2});
        const double at = gaussian_nll_sq(sq, sq);
        double prev_left = at;
        double prev_right = at;
        for (int k = 1; k <= 40; ++k) {
            const double f = 1.0 + 0.05 * k;
            const double left = gaussian_nll_sq(sq, vec({e2 / f}));
            const double right = gaussian_nll_sq(sq, vec({e2 * f}));
            // moving away from e2 on either side strictly increases the loss
            CHECK(left > prev_left);
            CHECK(right > prev_right);
            prev_left = left;
            prev_right = right;
        }
    }
}

TEST_CASE("property: squared residuals beat any positive variance vector")
{
    Stream rng(13);
    for (int inst = 0; inst < 5; ++inst) {
        const Index n = 50;
        VectorXd y(n), p(n);
        for (Index i = 0; i < n; ++i) {
            y[i] = rng.uniform(-3, 3);
            p[i] = rng.uniform(-3, 3);
        }
        const VectorXd ideal = (y - p).array().square().matrix();
        const double best = gaussian_nll(y, p, ideal);
        for (int k = 0; k < 100; ++k) {
            VectorXd v(n);
            for (Index i = 0; i < n; ++i) v[i] = std::exp(rng.uniform(-5, 3));
            CHECK(best <= gaussian_nll(y, p, v));
        }
    }
}

TEST_CASE("uniform alpha grid")
{
    const auto g = uniform_alpha_grid(3);
    REQUIRE(g.size() == 3);
    CHECK(g[0] == 0.25);
    CHECK(g[1] == 0.5);
    CHECK(g[2] == 0.75);
}
