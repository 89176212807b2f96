#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dropinj/dataset.hpp"
#include "dropinj/tuner.hpp"

namespace dropinj {

struct SplitPlan {
    double test_fraction = 0.1;
    double validation_fraction_of_train = 0.2;
    std::size_t repeats = 5;
    Seed base_seed = 0;

    void validate() const;
};

/// Row indices of one repeat. `fit` and `validation` partition the training
/// part; `test` is held out from all tuning.
struct SplitIndices {
    std::vector<Index> fit;
    std::vector<Index> validation;
    std::vector<Index> test;
};

SplitIndices make_split(Index n, const SplitPlan& plan, std::size_t repeat);

struct ExperimentConfig {
    SplitPlan split;
    TrainConfig train;
    std::vector<Index> hidden_sizes{50};
    Activation activation = Activation::relu;
    RateGrid grid = RateGrid::default_grid();
    std::vector<std::size_t> placement;
    std::size_t passes = 100;
    double tau = kDefaultTau;
    std::size_t alpha_points = kDefaultAlphaPoints;
    bool embedded = false;
    std::size_t threads = 1;

    void validate() const;
};

/// Held-out metrics at the rate chosen by the scale-aware objective, with
/// the scale factors fitted on validation. NLL/MA are in standardized units;
/// `rmse` is in original target units.
struct TestMetrics {
    double rate_unscaled = 0.0;
    double rate_scaled = 0.0;
    double scale = 1.0;
    std::optional<double> relaxed_scale;

    double rmse = 0.0;
    double nll_unscaled = 0.0;
    double nll_scaled = 0.0;
    std::optional<double> nll_relaxed;
    double ma_unscaled = 0.0;
    double ma_scaled = 0.0;
    std::optional<double> ma_relaxed;

    /// The same quantities at the rate chosen by the unscaled objective.
    double rmse_at_unscaled_rate = 0.0;
    double nll_at_unscaled_rate = 0.0;
    double ma_at_unscaled_rate = 0.0;

    CalibrationCurve curve_unscaled;
    CalibrationCurve curve_scaled;
    std::optional<CalibrationCurve> curve_relaxed;
};

struct RepeatReport {
    std::size_t repeat = 0;
    Seed seed = 0;
    std::size_t n_fit = 0;
    std::size_t n_validation = 0;
    std::size_t n_test = 0;
    SweepReport sweep;
    TestMetrics injected;
    std::optional<TestMetrics> embedded;
};

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;
    std::size_t count = 0;
};

struct ExperimentReport {
    std::string dataset;
    Index n_rows = 0;
    Index n_features = 0;
    ExperimentConfig config;
    std::vector<RepeatReport> repeats;
    /// "<method>.<metric>" -> mean/std over repeats
    std::map<std::string, Aggregate> aggregates;
};

ExperimentReport run_experiment(const Dataset& data, const ExperimentConfig& config);

/// Recomputes `report.aggregates` from the per-repeat metrics.
void aggregate(ExperimentReport& report);

} // namespace dropinj
