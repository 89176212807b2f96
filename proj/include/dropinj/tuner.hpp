#pragma once

#include <bit>
#include <optional>
#include <type_traits>
#include <string>
#include <vector>

#include "dropinj/mc_sampler.hpp"
#include "dropinj/scaling.hpp"
#include "dropinj/train.hpp"

namespace dropinj {

/// Strictly increasing dropout rates in [0, 1).
class RateGrid {
public:
    explicit RateGrid(std::vector<double> rates);

    static RateGrid log_spaced(double lo, double hi, std::size_t count);
    static RateGrid linear(double lo, double hi, std::size_t count);
    /// "min,max,count,log|lin"
    static RateGrid parse(const std::string& text);
    /// 15 log-spaced rates in [0.001, 0.5].
    static RateGrid default_grid() { return log_spaced(0.001, 0.5, 15); }

    const std::vector<double>& rates() const { return rates_; }
    std::size_t size() const { return rates_.size(); }

private:
    std::vector<double> rates_;
};

/// One row of the per-rate table. NLLs are in standardized target units.
struct SweepRow {
    double rate = 0.0;
    double rmse = 0.0;
    double nll_unscaled = 0.0;
    double nll_scaled = 0.0;
    double scale_factor = 1.0;
    double ma_unscaled = 0.0;
    double ma_scaled = 0.0;
    double nll_ideal = 0.0;
    std::optional<Seed> train_seed;
};

struct SweepOptions {
    std::size_t passes = 100;
    Seed seed = 0;
    std::size_t alpha_points = kDefaultAlphaPoints;
    std::size_t threads = 1;
    std::vector<std::size_t> placement;
    double tau = kDefaultTau;
    bool relax = true;
};

/// Masks for a given rate come from a stream keyed by the rate's bits, so a
/// rate gets the same masks whatever grid it belongs to.
inline Seed rate_seed(Seed base, double rate)
{
    return derive_seed(base, StreamTag::rate, {std::bit_cast<std::uint64_t>(rate)});
}

template <class Scalar>
struct RateEvaluation {
    SweepRow row;
    McEstimate<Scalar> estimate;  // variances already floored
};

template <class Scalar, class DX, class DY>
RateEvaluation<Scalar> evaluate_rate(const MlpModel<Scalar>& model, const Eigen::MatrixBase<DX>& x,
                                     const Eigen::MatrixBase<DY>& y, double rate, const SweepOptions& opt)
{
    if (x.rows() == 0) throw EmptyDataError("validation set is empty");
    if (y.size() != x.rows()) throw InputShapeError("validation targets and features disagree on row count");
    RateEvaluation<Scalar> ev;
    ev.estimate = mc_predict(model, x, DropoutConfig{rate, opt.placement}, opt.passes, rate_seed(opt.seed, rate),
                             opt.threads);
    auto& est = ev.estimate;
    est.variance = floor_variances(est.variance);

    const Vector<Scalar> sq = ideal_uncertainty(y, est.mean);
    const ScaleResult scale = optimal_scale(sq, est.variance);
    const Vector<Scalar> scaled = apply_scale(est.variance, scale.factor);

    SweepRow& row = ev.row;
    row.rate = rate;
    row.rmse = static_cast<double>(rmse(y, est.mean));
    row.nll_unscaled = scale.nll_unscaled;
    row.nll_scaled = scale.nll_scaled;
    row.scale_factor = scale.factor;
    row.ma_unscaled = miscalibration_area(calibration_curve(y, est.mean, est.variance, opt.alpha_points));
    row.ma_scaled = miscalibration_area(calibration_curve(y, est.mean, scaled, opt.alpha_points));
    row.nll_ideal = static_cast<double>(gaussian_nll_sq(sq, sq));
    return ev;
}

namespace detail {

// First index of the minimum; rows ascend in rate, so ties go to the smaller rate.
template <class Key>
std::size_t argmin_rows(const std::vector<SweepRow>& rows, Key key)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (key(rows[i]) < key(rows[best])) best = i;
    return best;
}

} // namespace detail

inline std::size_t select_unscaled(const std::vector<SweepRow>& rows)
{
    return detail::argmin_rows(rows, [](const SweepRow& r) { return r.nll_unscaled; });
}

inline std::size_t select_scaled(const std::vector<SweepRow>& rows)
{
    return detail::argmin_rows(rows, [](const SweepRow& r) { return r.nll_scaled; });
}

struct TuneResult {
    double rate = 0.0;
    double scale = 1.0;
    std::vector<SweepRow> rows;
};

template <class Scalar, class DX, class DY>
std::vector<SweepRow> sweep_rows(const MlpModel<Scalar>& model, const Eigen::MatrixBase<DX>& x,
                                 const Eigen::MatrixBase<DY>& y, const RateGrid& grid, const SweepOptions& opt)
{
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (double rate : grid.rates()) rows.push_back(evaluate_rate(model, x, y, rate, opt).row);
    return rows;
}

/// Rate minimising the unscaled validation NLL.
template <class Scalar, class DX, class DY>
TuneResult tune_unscaled(const MlpModel<Scalar>& model, const Eigen::MatrixBase<DX>& x,
                         const Eigen::MatrixBase<DY>& y, const RateGrid& grid, const SweepOptions& opt)
{
    TuneResult t;
    t.rows = sweep_rows(model, x, y, grid, opt);
    const auto i = select_unscaled(t.rows);
    t.rate = t.rows[i].rate;
    t.scale = 1.0;
    return t;
}

/// Rate minimising the validation NLL after the analytic rescaling, with its
/// scale factor.
template <class Scalar, class DX, class DY>
TuneResult tune_scaled(const MlpModel<Scalar>& model, const Eigen::MatrixBase<DX>& x,
                       const Eigen::MatrixBase<DY>& y, const RateGrid& grid, const SweepOptions& opt)
{
    TuneResult t;
    t.rows = sweep_rows(model, x, y, grid, opt);
    const auto i = select_scaled(t.rows);
    t.rate = t.rows[i].rate;
    t.scale = t.rows[i].scale_factor;
    return t;
}

struct MethodSweep {
    std::vector<SweepRow> rows;
    double chosen_rate_unscaled = 0.0;
    double chosen_rate_scaled = 0.0;
    double chosen_scale = 1.0;
    std::optional<ScaleBracket> bracket;
    std::optional<RelaxationResult> relaxation;
    std::string relaxation_error;
};

struct SweepReport {
    MethodSweep injected;
    std::optional<MethodSweep> embedded;
};

/// One model per grid rate, trained with that rate's dropout active. All
/// share `init_seed`; the mask/shuffle seed is keyed by the rate.
template <class Scalar>
struct EmbeddedModels {
    std::vector<MlpModel<Scalar>> models;
    std::vector<Seed> train_seeds;
};

template <class Scalar = double, class DX, class DY>
EmbeddedModels<Scalar> train_embedded(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                                      const RateGrid& grid, const std::vector<Index>& hidden_sizes,
                                      Activation act, const TrainConfig& base, Seed init_seed,
                                      const std::vector<std::size_t>& placement = {})
{
    EmbeddedModels<Scalar> out;
    for (double rate : grid.rates()) {
        TrainConfig cfg = base;
        cfg.dropout = DropoutConfig{rate, placement};
        cfg.seed = rate_seed(base.seed, rate);
        out.models.push_back(train<Scalar>(x, y, hidden_sizes, act, cfg, init_seed));
        out.train_seeds.push_back(cfg.seed);
    }
    return out;
}

namespace detail {

template <class Scalar, class DX, class DY, class ModelAt>
MethodSweep sweep_method(ModelAt model_at, const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                         const RateGrid& grid, const SweepOptions& opt)
{
    MethodSweep ms;
    std::vector<McEstimate<Scalar>> estimates;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto ev = evaluate_rate(model_at(i), x, y, grid.rates()[i], opt);
        ms.rows.push_back(ev.row);
        estimates.push_back(std::move(ev.estimate));
    }
    ms.chosen_rate_unscaled = ms.rows[select_unscaled(ms.rows)].rate;
    const auto best = select_scaled(ms.rows);
    ms.chosen_rate_scaled = ms.rows[best].rate;
    ms.chosen_scale = ms.rows[best].scale_factor;

    if (opt.relax) {
        const auto& est = estimates[best];
        try {
            ms.bracket = bracket_scale(y, est.mean, est.variance, ms.chosen_scale, opt.alpha_points);
            ms.relaxation = relax_scale(y, est.mean, est.variance, *ms.bracket, opt.tau, opt.alpha_points);
        } catch (const RuntimeFailure& e) {
            ms.relaxation_error = e.what();
        }
    }
    return ms;
}

} // namespace detail

/// Full per-rate table on the validation set for injected dropout on
/// `plain` and, when given, embedded dropout on one model per rate.
template <class Scalar, class DX, class DY>
SweepReport sweep(const MlpModel<Scalar>& plain, const EmbeddedModels<std::type_identity_t<Scalar>>* embedded,
                  const Eigen::MatrixBase<DX>& x_val, const Eigen::MatrixBase<DY>& y_val, const RateGrid& grid,
                  const SweepOptions& opt)
{
    SweepReport report;
    report.injected = detail::sweep_method<Scalar>([&](std::size_t) -> const MlpModel<Scalar>& { return plain; },
                                                   x_val, y_val, grid, opt);
    if (embedded) {
        if (embedded->models.size() != grid.size() || embedded->train_seeds.size() != grid.size())
            throw ValidationError("embedded models must match the rate grid one-to-one");
        report.embedded = detail::sweep_method<Scalar>(
            [&](std::size_t i) -> const MlpModel<Scalar>& { return embedded->models[i]; }, x_val, y_val, grid,
            opt);
        for (std::size_t i = 0; i < grid.size(); ++i) report.embedded->rows[i].train_seed = embedded->train_seeds[i];
    }
    return report;
}

} // namespace dropinj
