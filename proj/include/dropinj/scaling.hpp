#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dropinj/metrics.hpp"

namespace dropinj {

/// Squared residuals (y - yhat)^2: the per-sample NLL-minimising variance.
template <class DY, class DP>
Vector<typename DY::Scalar> ideal_uncertainty(const Eigen::DenseBase<DY>& targets,
                                              const Eigen::DenseBase<DP>& predictions)
{
    detail::require_same_length(targets, predictions);
    return (targets.derived().array() - predictions.derived().array()).square().matrix();
}

/// Variances clamped at kVarianceFloor.
template <class DV>
Vector<typename DV::Scalar> floor_variances(const Eigen::DenseBase<DV>& variances)
{
    using S = typename DV::Scalar;
    return variances.derived().array().max(static_cast<S>(kVarianceFloor)).matrix();
}

struct ScaleResult {
    double factor = 1.0;
    double nll_unscaled = 0.0;
    double nll_scaled = 0.0;
};

/// NLL-optimal multiplier for the variance vector: C = mean(sq / var).
/// Variances are floored first; both NLL values refer to the floored vector.
template <class DS, class DV>
ScaleResult optimal_scale(const Eigen::DenseBase<DS>& squared_errors, const Eigen::DenseBase<DV>& variances)
{
    detail::require_same_length(squared_errors, variances);
    if (squared_errors.size() == 0) throw EmptyDataError("optimal_scale of empty data");
    using S = typename DS::Scalar;
    const Vector<S> v = floor_variances(variances);
    const S c = (squared_errors.derived().array() / v.array()).sum() / static_cast<S>(v.size());
    if (!(c > S(0)) || !std::isfinite(static_cast<double>(c)))
        throw DomainError("optimal scale is not a positive finite number (all residuals zero?)");
    ScaleResult r;
    r.factor = static_cast<double>(c);
    r.nll_unscaled = static_cast<double>(gaussian_nll_sq(squared_errors, v));
    r.nll_scaled = static_cast<double>(gaussian_nll_sq(squared_errors, (v * c).eval()));
    return r;
}

template <class DV>
Vector<typename DV::Scalar> apply_scale(const Eigen::DenseBase<DV>& variances, double factor)
{
    if (!(factor > 0.0) || !std::isfinite(factor))
        throw DomainError("scale factor must be positive and finite, got " + std::to_string(factor));
    using S = typename DV::Scalar;
    return (variances.derived().array() * static_cast<S>(factor)).matrix();
}

/// Balance of the calibration curve obtained with variances scaled by c.
template <class DY, class DM, class DV>
double balance_at_scale(const Eigen::DenseBase<DY>& targets, const Eigen::DenseBase<DM>& means,
                        const Eigen::DenseBase<DV>& variances, double c, std::size_t alpha_points)
{
    return balance(calibration_curve(targets, means, apply_scale(variances, c), alpha_points));
}

struct ScaleBracket {
    double low = 0.0;
    double high = 0.0;
};

inline constexpr int kMaxBracketDoublings = 60;
inline constexpr std::size_t kMaxRelaxIterations = 200;
inline constexpr double kDefaultTau = 0.01;

/// Expands geometrically from `start` by factors of two until Balance is
/// negative at the low end and positive at the high end.
template <class DY, class DM, class DV>
ScaleBracket bracket_scale(const Eigen::DenseBase<DY>& targets, const Eigen::DenseBase<DM>& means,
                           const Eigen::DenseBase<DV>& variances, double start,
                           std::size_t alpha_points = kDefaultAlphaPoints)
{
    if (!(start > 0.0) || !std::isfinite(start)) throw DomainError("bracket_scale: start factor must be positive");
    auto bal = [&](double c) { return balance_at_scale(targets, means, variances, c, alpha_points); };

    ScaleBracket b{start, start};
    int k = 0;
    while (bal(b.low) >= 0.0) {
        if (++k > kMaxBracketDoublings)
            throw NoBracketError("no scale with negative Balance within 2^-60 of the start factor", +1);
        b.low /= 2.0;
    }
    k = 0;
    while (bal(b.high) <= 0.0) {
        if (++k > kMaxBracketDoublings)
            throw NoBracketError("no scale with positive Balance within 2^60 of the start factor", -1);
        b.high *= 2.0;
    }
    return b;
}

struct RelaxationResult {
    double factor_relaxed = 1.0;
    std::size_t iterations = 0;
    double final_balance = 0.0;
    double tolerance = kDefaultTau;
};

/// Bisection on the scale factor until |Balance| < tau. When `trace` is
/// given it receives the bracket after every step.
template <class DY, class DM, class DV>
RelaxationResult relax_scale(const Eigen::DenseBase<DY>& targets, const Eigen::DenseBase<DM>& means,
                             const Eigen::DenseBase<DV>& variances, ScaleBracket bracket, double tau = kDefaultTau,
                             std::size_t alpha_points = kDefaultAlphaPoints,
                             std::vector<ScaleBracket>* trace = nullptr)
{
    if (!(tau > 0.0)) throw ValidationError("relax_scale: tau must be positive");
    if (!(bracket.low > 0.0 && bracket.low < bracket.high))
        throw ValidationError("relax_scale: bracket must satisfy 0 < low < high");
    auto bal = [&](double c) { return balance_at_scale(targets, means, variances, c, alpha_points); };
    if (!(bal(bracket.low) < 0.0)) throw ValidationError("relax_scale: Balance at the low end is not negative");
    if (!(bal(bracket.high) > 0.0)) throw ValidationError("relax_scale: Balance at the high end is not positive");

    RelaxationResult r;
    r.tolerance = tau;
    double mid = 0.0;
    double b = 0.0;
    do {
        if (r.iterations == kMaxRelaxIterations)
            throw ConvergenceError("relax_scale: no |Balance| < tau after " + std::to_string(kMaxRelaxIterations)
                                       + " bisection steps (last Balance " + std::to_string(b) + ")",
                                   b);
        mid = 0.5 * (bracket.low + bracket.high);
        b = bal(mid);
        ++r.iterations;
        if (b < 0.0)
            bracket.low = mid;
        else if (b > 0.0)
            bracket.high = mid;
        if (trace) trace->push_back(bracket);
    } while (std::abs(b) >= tau);

    r.factor_relaxed = mid;
    r.final_balance = b;
    return r;
}

} // namespace dropinj
