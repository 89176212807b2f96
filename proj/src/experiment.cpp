#include "dropinj/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace dropinj {

void SplitPlan::validate() const
{
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("test_fraction must lie in (0, 1)");
    if (!(validation_fraction_of_train > 0.0 && validation_fraction_of_train < 1.0))
        throw ValidationError("validation_fraction_of_train must lie in (0, 1)");
    if (repeats == 0) throw ValidationError("repeats must be positive");
}

SplitIndices make_split(Index n, const SplitPlan& plan, std::size_t repeat)
{
    plan.validate();
    const auto n_test = std::max<Index>(1, static_cast<Index>(std::lround(static_cast<double>(n) * plan.test_fraction)));
    const Index n_train = n - n_test;
    const auto n_val = std::max<Index>(
        1, static_cast<Index>(std::lround(static_cast<double>(n_train) * plan.validation_fraction_of_train)));
    if (n_train - n_val < 1) throw ValidationError("dataset too small for the split plan (" + std::to_string(n) + " rows)");

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Stream rng(derive_seed(plan.base_seed, StreamTag::split, {static_cast<std::uint64_t>(repeat)}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    SplitIndices s;
    const auto a = order.begin();
    s.test.assign(a, a + n_test);
    s.validation.assign(a + n_test, a + n_test + n_val);
    s.fit.assign(a + n_test + n_val, order.end());
    return s;
}

void ExperimentConfig::validate() const
{
    split.validate();
    train.validate();
    if (hidden_sizes.empty()) throw ValidationError("at least one hidden layer is required");
    for (auto h : hidden_sizes)
        if (h <= 0) throw ValidationError("hidden sizes must be positive");
    if (passes < 2) throw ValidationError("passes must be at least 2");
    if (!(tau > 0.0)) throw ValidationError("tau must be positive");
    if (alpha_points < 2) throw ValidationError("alpha points must be at least 2");
    for (auto p : placement)
        if (p >= hidden_sizes.size()) throw ValidationError("dropout placement refers to a missing hidden layer");
}

namespace {

using ModelForRate = std::function<const MlpModel<double>&(double)>;

TestMetrics evaluate_on_test(const ModelForRate& model_at, const MethodSweep& tuned, const Dataset& test,
                             const Standardizer& standardizer, const ExperimentConfig& cfg, Seed seed)
{
    auto estimate = [&](double rate) {
        auto est = mc_predict(model_at(rate), test.features, DropoutConfig{rate, cfg.placement}, cfg.passes,
                              rate_seed(seed, rate), cfg.threads);
        est.variance = floor_variances(est.variance);
        return est;
    };
    const VectorXd& y = test.targets;
    TestMetrics t;
    t.rate_unscaled = tuned.chosen_rate_unscaled;
    t.rate_scaled = tuned.chosen_rate_scaled;
    t.scale = tuned.chosen_scale;

    const auto est = estimate(t.rate_scaled);
    const VectorXd scaled = apply_scale(est.variance, t.scale);
    t.rmse = rmse(y, est.mean) * standardizer.target_scale;
    t.nll_unscaled = gaussian_nll(y, est.mean, est.variance);
    t.nll_scaled = gaussian_nll(y, est.mean, scaled);
    t.curve_unscaled = calibration_curve(y, est.mean, est.variance, cfg.alpha_points);
    t.curve_scaled = calibration_curve(y, est.mean, scaled, cfg.alpha_points);
    t.ma_unscaled = miscalibration_area(t.curve_unscaled);
    t.ma_scaled = miscalibration_area(t.curve_scaled);
    if (tuned.relaxation) {
        t.relaxed_scale = tuned.relaxation->factor_relaxed;
        const VectorXd relaxed = apply_scale(est.variance, *t.relaxed_scale);
        t.nll_relaxed = gaussian_nll(y, est.mean, relaxed);
        t.curve_relaxed = calibration_curve(y, est.mean, relaxed, cfg.alpha_points);
        t.ma_relaxed = miscalibration_area(*t.curve_relaxed);
    }

    const auto est_u = t.rate_unscaled == t.rate_scaled ? est : estimate(t.rate_unscaled);
    t.rmse_at_unscaled_rate = rmse(y, est_u.mean) * standardizer.target_scale;
    t.nll_at_unscaled_rate = gaussian_nll(y, est_u.mean, est_u.variance);
    t.ma_at_unscaled_rate = miscalibration_area(calibration_curve(y, est_u.mean, est_u.variance, cfg.alpha_points));
    return t;
}

void add_metric(std::map<std::string, std::vector<double>>& acc, const std::string& key, double v)
{
    acc[key].push_back(v);
}

void collect(std::map<std::string, std::vector<double>>& acc, const std::string& method, const TestMetrics& t)
{
    add_metric(acc, method + ".rate_unscaled", t.rate_unscaled);
    add_metric(acc, method + ".rate_scaled", t.rate_scaled);
    add_metric(acc, method + ".scale", t.scale);
    add_metric(acc, method + ".rmse", t.rmse);
    add_metric(acc, method + ".nll_unscaled", t.nll_unscaled);
    add_metric(acc, method + ".nll_scaled", t.nll_scaled);
    add_metric(acc, method + ".ma_unscaled", t.ma_unscaled);
    add_metric(acc, method + ".ma_scaled", t.ma_scaled);
    add_metric(acc, method + ".rmse_at_unscaled_rate", t.rmse_at_unscaled_rate);
    add_metric(acc, method + ".nll_at_unscaled_rate", t.nll_at_unscaled_rate);
    add_metric(acc, method + ".ma_at_unscaled_rate", t.ma_at_unscaled_rate);
    if (t.relaxed_scale) {
        add_metric(acc, method + ".relaxed_scale", *t.relaxed_scale);
        add_metric(acc, method + ".nll_relaxed", *t.nll_relaxed);
        add_metric(acc, method + ".ma_relaxed", *t.ma_relaxed);
    }
}

} // namespace

void aggregate(ExperimentReport& report)
{
    std::map<std::string, std::vector<double>> acc;
    for (const auto& r : report.repeats) {
        collect(acc, "injected", r.injected);
        if (r.embedded) collect(acc, "embedded", *r.embedded);
    }
    report.aggregates.clear();
    for (const auto& [key, values] : acc) {
        Aggregate a;
        a.count = values.size();
        a.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(a.count);
        if (a.count > 1) {
            double ss = 0.0;
            for (double v : values) ss += (v - a.mean) * (v - a.mean);
            a.std = std::sqrt(ss / static_cast<double>(a.count - 1));
        }
        report.aggregates[key] = a;
    }
}

ExperimentReport run_experiment(const Dataset& data, const ExperimentConfig& config)
{
    config.validate();
    data.validate();

    ExperimentReport report;
    report.dataset = data.name;
    report.n_rows = data.size();
    report.n_features = data.dim();
    report.config = config;

    for (std::size_t r = 0; r < config.split.repeats; ++r) {
        RepeatReport rep;
        rep.repeat = r;
        rep.seed = derive_seed(config.split.base_seed, StreamTag::repeat, {static_cast<std::uint64_t>(r)});

        const auto idx = make_split(data.size(), config.split, r);
        const Dataset fit_raw = data.subset(idx.fit);
        const auto standardizer = Standardizer::fit(fit_raw.features, fit_raw.targets);
        const Dataset fit = standardizer.transform(fit_raw);
        const Dataset val = standardizer.transform(data.subset(idx.validation));
        const Dataset test = standardizer.transform(data.subset(idx.test));
        rep.n_fit = idx.fit.size();
        rep.n_validation = idx.validation.size();
        rep.n_test = idx.test.size();

        TrainConfig tc = config.train;
        tc.seed = rep.seed;
        tc.dropout.reset();

        SweepOptions opt;
        opt.passes = config.passes;
        opt.seed = derive_seed(rep.seed, StreamTag::mc_pass, {1});
        opt.alpha_points = config.alpha_points;
        opt.threads = config.threads;
        opt.placement = config.placement;
        opt.tau = config.tau;
        const Seed test_seed = derive_seed(rep.seed, StreamTag::mc_pass, {2});

        try {
            const auto plain = train(fit.features, fit.targets, config.hidden_sizes, config.activation, tc, rep.seed);
            std::optional<EmbeddedModels<double>> emb;
            if (config.embedded)
                emb = train_embedded(fit.features, fit.targets, config.grid, config.hidden_sizes, config.activation, tc,
                                     rep.seed, config.placement);

            // Tuning sees the validation split only.
            rep.sweep = sweep(plain, emb ? &*emb : nullptr, val.features, val.targets, config.grid, opt);

            rep.injected = evaluate_on_test([&](double) -> const MlpModel<double>& { return plain; },
                                            rep.sweep.injected, test, standardizer, config, test_seed);
            if (emb) {
                const auto embedded_at = [&](double rate) -> const MlpModel<double>& {
                    const auto& rates = config.grid.rates();
                    const auto i = static_cast<std::size_t>(std::find(rates.begin(), rates.end(), rate) - rates.begin());
                    return emb->models.at(i);
                };
                rep.embedded = evaluate_on_test(embedded_at, *rep.sweep.embedded, test, standardizer, config, test_seed);
            }
        } catch (const DivergedTrainingError& e) {
            throw RuntimeFailure("repeat " + std::to_string(r) + ": " + e.what());
        }
        report.repeats.push_back(std::move(rep));
    }
    aggregate(report);
    return report;
}

} // namespace dropinj
