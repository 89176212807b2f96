// Command-line front end: train, inject, tune, relax, experiment, report.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dropinj/dataset.hpp"
#include "dropinj/experiment.hpp"
#include "dropinj/model_io.hpp"
#include "dropinj/report.hpp"
#include "dropinj/synthetic.hpp"
#include "dropinj/text_io.hpp"

namespace {

using namespace dropinj;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Common {
    std::string data;
    std::string model;
    std::string out;
    std::string rate_grid = "0.001,0.5,15,log";
    std::size_t passes = 100;
    double tau = kDefaultTau;
    std::size_t alpha_points = kDefaultAlphaPoints;
    Seed seed = 0;
    std::size_t threads = 1;
};

struct TrainOpts {
    std::vector<Index> hidden{50};
    std::string activation = "relu";
    std::size_t epochs = 100;
    double learning_rate = 0.01;
    std::size_t batch_size = 32;
};

// "synthetic:linear[:N]" and "synthetic:concrete[:N]" generate data in-process.
Dataset read_dataset(const std::string& source, Seed seed)
{
    const std::string prefix = "synthetic:";
    if (source.rfind(prefix, 0) != 0) return load_csv(source);
    std::string kind = source.substr(prefix.size());
    Index n = 0;
    if (const auto colon = kind.find(':'); colon != std::string::npos) {
        n = std::stol(kind.substr(colon + 1));
        kind = kind.substr(0, colon);
    }
    if (kind == "linear") return make_linear_task(n > 0 ? n : 2000, seed);
    if (kind == "concrete") return make_concrete_like(n > 0 ? n : 1030, seed);
    throw ValidationError("unknown synthetic dataset '" + kind + "' (expected linear|concrete)");
}

TrainConfig make_train_config(const TrainOpts& t, Seed seed)
{
    TrainConfig c;
    c.batch_size = t.batch_size;
    c.learning_rate = t.learning_rate;
    c.epochs = t.epochs;
    c.seed = seed;
    return c;
}

void add_train_flags(CLI::App* cmd, TrainOpts& t)
{
    cmd->add_option("--hidden", t.hidden, "Hidden layer widths")->capture_default_str();
    cmd->add_option("--activation", t.activation, "relu|tanh")->capture_default_str();
    cmd->add_option("--epochs", t.epochs)->capture_default_str();
    cmd->add_option("--lr", t.learning_rate, "SGD learning rate")->capture_default_str();
    cmd->add_option("--batch-size", t.batch_size)->capture_default_str();
}

Standardizer standardizer_or_identity(const LoadedModel& loaded, const Dataset& data)
{
    if (loaded.standardizer) return *loaded.standardizer;
    Standardizer s;
    s.feature_mean = VectorXd::Zero(data.dim());
    s.feature_scale = VectorXd::Ones(data.dim());
    return s;
}

int cmd_train(const Common& c, const TrainOpts& t)
{
    const Dataset data = read_dataset(c.data, c.seed);
    const auto st = Standardizer::fit(data.features, data.targets);
    const Dataset z = st.transform(data);
    const auto model =
        train(z.features, z.targets, t.hidden, activation_from_string(t.activation), make_train_config(t, c.seed), c.seed);
    save_model(c.out, model, &st);
    const VectorXd pred = forward_batch(model, z.features);
    std::printf("trained %s on %ld rows; training RMSE %.6g (original units)\n", c.out.c_str(),
                static_cast<long>(data.size()), rmse(z.targets, pred) * st.target_scale);
    return 0;
}

int cmd_inject(const Common& c, double rate)
{
    const auto loaded = load_model(c.model);
    const Dataset data = read_dataset(c.data, c.seed);
    const auto st = standardizer_or_identity(loaded, data);
    const Dataset z = st.transform(data);
    auto est = mc_predict(loaded.model, z.features, DropoutConfig{rate, {}}, c.passes, c.seed, c.threads);
    est.variance = floor_variances(est.variance);

    const double nll = gaussian_nll(z.targets, est.mean, est.variance);
    const auto curve = calibration_curve(z.targets, est.mean, est.variance, c.alpha_points);
    const std::string metrics =
        metrics_summary_json(rmse(z.targets, est.mean) * st.target_scale, nll, miscalibration_area(curve), balance(curve));

    McEstimate<double> original = est;
    original.mean = st.inverse_targets(est.mean);
    original.variance = st.inverse_variances(est.variance);
    if (!c.out.empty()) write_file_atomic(c.out, estimate_csv(original));
    std::cout << metrics;
    return 0;
}

int cmd_tune(const Common& c)
{
    const auto loaded = load_model(c.model);
    const Dataset data = read_dataset(c.data, c.seed);
    const auto st = standardizer_or_identity(loaded, data);
    const Dataset z = st.transform(data);
    SweepOptions opt;
    opt.passes = c.passes;
    opt.seed = c.seed;
    opt.alpha_points = c.alpha_points;
    opt.tau = c.tau;
    opt.threads = c.threads;
    const auto report = sweep(loaded.model, nullptr, z.features, z.targets, RateGrid::parse(c.rate_grid), opt);
    if (!c.out.empty()) {
        std::filesystem::create_directories(c.out);
        write_file_atomic(std::filesystem::path(c.out) / "tune_sweep.csv", sweep_rows_csv(report.injected.rows));
        write_file_atomic(std::filesystem::path(c.out) / "tune.json", sweep_report_json(report));
    }
    std::printf("unscaled objective: rate %.6g\nscaled objective:   rate %.6g  scale %.6g\n",
                report.injected.chosen_rate_unscaled, report.injected.chosen_rate_scaled, report.injected.chosen_scale);
    if (report.injected.relaxation)
        std::printf("relaxed scale:      %.6g  (|Balance| %.3g after %zu steps)\n",
                    report.injected.relaxation->factor_relaxed, std::abs(report.injected.relaxation->final_balance),
                    report.injected.relaxation->iterations);
    else if (!report.injected.relaxation_error.empty())
        std::printf("relaxation failed: %s\n", report.injected.relaxation_error.c_str());
    return 0;
}

int cmd_relax(const Common& c, const std::string& predictions)
{
    const Dataset data = read_dataset(c.data, c.seed);
    const Dataset preds = load_csv(predictions);
    if (preds.dim() != 2 || preds.size() != data.size())
        throw ValidationError("predictions file must have columns instance_id,mean,variance and one row per instance");
    const VectorXd mean = preds.features.col(1);
    const VectorXd variance = floor_variances(preds.targets);
    const auto scale = optimal_scale(ideal_uncertainty(data.targets, mean), variance);
    const auto bracket = bracket_scale(data.targets, mean, variance, scale.factor, c.alpha_points);
    const auto relaxed = relax_scale(data.targets, mean, variance, bracket, c.tau, c.alpha_points);
    const auto text = scale_json(scale, &bracket, &relaxed);
    if (!c.out.empty()) write_file_atomic(c.out, text);
    std::cout << text;
    return 0;
}

int cmd_experiment(const Common& c, const TrainOpts& t, std::size_t repeats, bool embedded)
{
    const Dataset data = read_dataset(c.data, c.seed);
    ExperimentConfig cfg;
    cfg.split.repeats = repeats;
    cfg.split.base_seed = c.seed;
    cfg.train = make_train_config(t, c.seed);
    cfg.hidden_sizes = t.hidden;
    cfg.activation = activation_from_string(t.activation);
    cfg.grid = RateGrid::parse(c.rate_grid);
    cfg.passes = c.passes;
    cfg.tau = c.tau;
    cfg.alpha_points = c.alpha_points;
    cfg.embedded = embedded;
    cfg.threads = c.threads;
    const auto report = run_experiment(data, cfg);
    const auto files = export_report(report, c.out);
    for (const auto& [key, a] : report.aggregates)
        std::printf("%-36s %12.6g +- %.3g\n", key.c_str(), a.mean, a.std);
    std::printf("wrote %zu files + manifest.json to %s\n", files.size(), c.out.c_str());
    return 0;
}

int cmd_report(const Common& c, const std::string& report_path)
{
    const auto report = experiment_report_from_json(read_file(report_path));
    const auto files = export_report(report, c.out);
    std::printf("wrote %zu files + manifest.json to %s\n", files.size(), c.out.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Post hoc epistemic uncertainty for trained regressors via test-time dropout"};
    app.require_subcommand(1);

    Common c;
    TrainOpts t;
    double rate = 0.0;
    std::string predictions;
    std::string report_path;
    std::size_t repeats = 5;
    bool embedded = false;

    auto seed_opt = [&](CLI::App* cmd) { cmd->add_option("--seed", c.seed)->capture_default_str(); };
    auto passes_opt = [&](CLI::App* cmd) { cmd->add_option("--passes", c.passes, "Monte Carlo passes")->capture_default_str(); };
    auto calib_opts = [&](CLI::App* cmd) {
        cmd->add_option("--tau", c.tau, "Balance tolerance for the relaxed scale")->capture_default_str();
        cmd->add_option("--alpha-points", c.alpha_points, "Calibration grid size M")->capture_default_str();
    };
    auto threads_opt = [&](CLI::App* cmd) { cmd->add_option("--threads", c.threads)->capture_default_str(); };

    auto* train_cmd = app.add_subcommand("train", "Fit a plain (dropout-free) model and save it as JSON");
    train_cmd->add_option("--data", c.data, "CSV file (last column = target) or synthetic:linear|concrete")->required();
    train_cmd->add_option("--out", c.out, "Model JSON path")->required();
    seed_opt(train_cmd);
    add_train_flags(train_cmd, t);

    auto* inject_cmd = app.add_subcommand("inject", "Monte Carlo prediction with dropout injected at a given rate");
    inject_cmd->add_option("--data", c.data)->required();
    inject_cmd->add_option("--model", c.model)->required();
    inject_cmd->add_option("--rate", rate, "Dropout rate in [0, 1)")->required();
    inject_cmd->add_option("--out", c.out, "Predictions CSV (instance_id,mean,variance)");
    passes_opt(inject_cmd);
    seed_opt(inject_cmd);
    calib_opts(inject_cmd);
    threads_opt(inject_cmd);

    auto* tune_cmd = app.add_subcommand("tune", "Grid-search the dropout rate (unscaled and scale-aware)");
    tune_cmd->add_option("--data", c.data, "Validation set")->required();
    tune_cmd->add_option("--model", c.model)->required();
    tune_cmd->add_option("--rate-grid", c.rate_grid, "min,max,count,log|lin")->capture_default_str();
    tune_cmd->add_option("--out", c.out, "Output directory");
    passes_opt(tune_cmd);
    seed_opt(tune_cmd);
    calib_opts(tune_cmd);
    threads_opt(tune_cmd);

    auto* relax_cmd = app.add_subcommand("relax", "Optimal and calibration-relaxed scale factor for saved predictions");
    relax_cmd->add_option("--data", c.data, "Dataset providing the targets")->required();
    relax_cmd->add_option("--predictions", predictions, "CSV written by inject")->required();
    relax_cmd->add_option("--out", c.out, "JSON output path");
    calib_opts(relax_cmd);

    auto* exp_cmd = app.add_subcommand("experiment", "Repeated split / train / tune / test protocol");
    exp_cmd->add_option("--data", c.data)->required();
    exp_cmd->add_option("--out", c.out, "Output directory")->required();
    exp_cmd->add_option("--rate-grid", c.rate_grid, "min,max,count,log|lin")->capture_default_str();
    exp_cmd->add_option("--repeats", repeats)->capture_default_str();
    exp_cmd->add_flag("--embedded", embedded, "Also train and evaluate embedded dropout, one model per rate");
    passes_opt(exp_cmd);
    seed_opt(exp_cmd);
    calib_opts(exp_cmd);
    threads_opt(exp_cmd);
    add_train_flags(exp_cmd, t);

    auto* report_cmd = app.add_subcommand("report", "Re-emit report files from a saved report.json");
    report_cmd->add_option("--report", report_path)->required();
    report_cmd->add_option("--out", c.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*train_cmd) return cmd_train(c, t);
        if (*inject_cmd) return cmd_inject(c, rate);
        if (*tune_cmd) return cmd_tune(c);
        if (*relax_cmd) return cmd_relax(c, predictions);
        if (*exp_cmd) return cmd_experiment(c, t, repeats, embedded);
        if (*report_cmd) return cmd_report(c, report_path);
    } catch (const std::logic_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
