#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dropinj/errors.hpp"
#include "dropinj/types.hpp"

namespace dropinj {

/// Variances below this are clamped before logs and divisions.
inline constexpr double kVarianceFloor = 1e-12;

/// Default number of interior alpha points of a calibration curve.
inline constexpr std::size_t kDefaultAlphaPoints = 99;

/// Two-sided standard-normal quantile: P(|Z| <= z) = alpha, alpha in [0, 1).
double z_quantile(double alpha);

namespace detail {

template <class A, class B>
void require_same_length(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b)
{
    if (a.size() != b.size())
        throw InputShapeError("length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

} // namespace detail

template <class DY, class DP>
typename DY::Scalar rmse(const Eigen::DenseBase<DY>& targets, const Eigen::DenseBase<DP>& predictions)
{
    detail::require_same_length(targets, predictions);
    if (targets.size() == 0) throw EmptyDataError("rmse of empty data");
    using S = typename DY::Scalar;
    return std::sqrt((targets.derived().array() - predictions.derived().array()).square().sum()
                     / static_cast<S>(targets.size()));
}

/// Counts clamped variances across NLL evaluations.
struct NllDiagnostics {
    std::size_t floored = 0;
};

/// Mean Gaussian NLL from squared residuals:
/// (1/N) sum 0.5 sq / var + 0.5 log var, variances clamped at kVarianceFloor.
template <class DS, class DV>
typename DS::Scalar gaussian_nll_sq(const Eigen::DenseBase<DS>& squared_errors, const Eigen::DenseBase<DV>& variances,
                                    NllDiagnostics* diag = nullptr)
{
    detail::require_same_length(squared_errors, variances);
    if (squared_errors.size() == 0) throw EmptyDataError("nll of empty data");
    using S = typename DS::Scalar;
    const auto floor = static_cast<S>(kVarianceFloor);
    S total = 0;
    for (Index i = 0; i < squared_errors.size(); ++i) {
        S v = variances.derived().coeff(i);
        if (!(v >= floor)) {
            v = floor;
            if (diag) ++diag->floored;
        }
        total += S(0.5) * squared_errors.derived().coeff(i) / v + S(0.5) * std::log(v);
    }
    return total / static_cast<S>(squared_errors.size());
}

/// Mean Gaussian negative log-likelihood without the constant term:
/// (1/N) sum 0.5 (y - yhat)^2 / var + 0.5 log var.
template <class DY, class DP, class DV>
typename DY::Scalar gaussian_nll(const Eigen::DenseBase<DY>& targets, const Eigen::DenseBase<DP>& predictions,
                                 const Eigen::DenseBase<DV>& variances, NllDiagnostics* diag = nullptr)
{
    detail::require_same_length(targets, predictions);
    using S = typename DY::Scalar;
    const Vector<S> sq = (targets.derived().array() - predictions.derived().array()).square().matrix();
    return gaussian_nll_sq(sq, variances, diag);
}

/// Fraction of instances with |y - mean| <= z_alpha * sqrt(var).
template <class DY, class DM, class DV>
double observed_frequency(const Eigen::DenseBase<DY>& targets, const Eigen::DenseBase<DM>& means,
                          const Eigen::DenseBase<DV>& variances, double alpha)
{
    detail::require_same_length(targets, means);
    detail::require_same_length(targets, variances);
    if (targets.size() == 0) throw EmptyDataError("observed frequency of empty data");
    using S = typename DY::Scalar;
    const auto z = static_cast<S>(z_quantile(alpha));
    std::size_t inside = 0;
    for (Index i = 0; i < targets.size(); ++i) {
        const S half = z * std::sqrt(variances.derived().coeff(i));
        if (std::abs(targets.derived().coeff(i) - means.derived().coeff(i)) <= half) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(targets.size());
}

/// Expected (alphas) vs observed coverage on a strictly increasing grid.
struct CalibrationCurve {
    std::vector<double> alphas;
    std::vector<double> observed;

    std::size_t size() const { return alphas.size(); }
    void validate() const;
};

/// alpha_m = m / (M + 1), m = 1..M.
std::vector<double> uniform_alpha_grid(std::size_t points);

template <class DY, class DM, class DV>
CalibrationCurve calibration_curve(const Eigen::DenseBase<DY>& targets, const Eigen::DenseBase<DM>& means,
                                   const Eigen::DenseBase<DV>& variances,
                                   std::size_t points = kDefaultAlphaPoints)
{
    if (points < 2) throw ValidationError("calibration curve needs at least 2 alpha points");
    CalibrationCurve curve;
    curve.alphas = uniform_alpha_grid(points);
    curve.observed.reserve(points);
    for (double a : curve.alphas) curve.observed.push_back(observed_frequency(targets, means, variances, a));
    return curve;
}

/// (1/M) sum |observed - alpha|.
double miscalibration_area(const CalibrationCurve& curve);

/// (1/M) sum (observed - alpha); negative means overconfident on average.
double balance(const CalibrationCurve& curve);

} // namespace dropinj
