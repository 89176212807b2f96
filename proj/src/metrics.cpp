#include "dropinj/metrics.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dropinj {

namespace {

// Lower-tail inverse normal CDF for q in (0, 0.5]: Acklam's rational
// approximation (rel. error ~1e-9) polished by one Halley step on erfc.
double lower_tail_quantile(double q)
{
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (q < p_low) {
        const double r = std::sqrt(-2.0 * std::log(q));
        x = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5])
            / ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
    } else {
        const double s = q - 0.5;
        const double r = s * s;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * s
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }

    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - q;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

} // namespace

double z_quantile(double alpha)
{
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw DomainError("z_quantile: alpha must lie in [0, 1), got " + std::to_string(alpha));
    if (alpha == 0.0) return 0.0;
    return -lower_tail_quantile(0.5 * (1.0 - alpha));
}

std::vector<double> uniform_alpha_grid(std::size_t points)
{
    std::vector<double> alphas(points);
    for (std::size_t m = 0; m < points; ++m)
        alphas[m] = static_cast<double>(m + 1) / static_cast<double>(points + 1);
    return alphas;
}

void CalibrationCurve::validate() const
{
    if (alphas.size() != observed.size()) throw InputShapeError("calibration curve: length mismatch");
    if (alphas.empty()) throw EmptyDataError("calibration curve is empty");
    for (std::size_t m = 0; m < alphas.size(); ++m) {
        if (!(alphas[m] > 0.0 && alphas[m] < 1.0)) throw ValidationError("calibration curve: alpha outside (0,1)");
        if (m > 0 && !(alphas[m] > alphas[m - 1]))
            throw ValidationError("calibration curve: alphas not strictly increasing");
        if (!(observed[m] >= 0.0 && observed[m] <= 1.0))
            throw ValidationError("calibration curve: observed frequency outside [0,1]");
        if (m > 0 && observed[m] < observed[m - 1])
            throw ValidationError("calibration curve: observed frequency decreases");
    }
}

double miscalibration_area(const CalibrationCurve& curve)
{
    curve.validate();
    double sum = 0.0;
    for (std::size_t m = 0; m < curve.size(); ++m) sum += std::abs(curve.observed[m] - curve.alphas[m]);
    return sum / static_cast<double>(curve.size());
}

double balance(const CalibrationCurve& curve)
{
    curve.validate();
    double sum = 0.0;
    for (std::size_t m = 0; m < curve.size(); ++m) sum += curve.observed[m] - curve.alphas[m];
    return sum / static_cast<double>(curve.size());
}

} // namespace dropinj
