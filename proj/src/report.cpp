#include "dropinj/report.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "dropinj/text_io.hpp"

namespace dropinj {

using nlohmann::json;

namespace {

template <class T>
json opt_json(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> opt_from(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

} // namespace

void to_json(json& j, const CalibrationCurve& c)
{
    j = json{{"alphas", c.alphas}, {"observed", c.observed}};
}

void from_json(const json& j, CalibrationCurve& c)
{
    j.at("alphas").get_to(c.alphas);
    j.at("observed").get_to(c.observed);
}

void to_json(json& j, const SweepRow& r)
{
    j = json{{"rate", r.rate},
             {"rmse", r.rmse},
             {"nll_unscaled", r.nll_unscaled},
             {"nll_scaled", r.nll_scaled},
             {"scale_factor", r.scale_factor},
             {"ma_unscaled", r.ma_unscaled},
             {"ma_scaled", r.ma_scaled},
             {"nll_ideal", r.nll_ideal},
             {"train_seed", opt_json(r.train_seed)}};
}

void from_json(const json& j, SweepRow& r)
{
    j.at("rate").get_to(r.rate);
    j.at("rmse").get_to(r.rmse);
    j.at("nll_unscaled").get_to(r.nll_unscaled);
    j.at("nll_scaled").get_to(r.nll_scaled);
    j.at("scale_factor").get_to(r.scale_factor);
    j.at("ma_unscaled").get_to(r.ma_unscaled);
    j.at("ma_scaled").get_to(r.ma_scaled);
    j.at("nll_ideal").get_to(r.nll_ideal);
    r.train_seed = opt_from<Seed>(j, "train_seed");
}

void to_json(json& j, const ScaleBracket& b)
{
    j = json{{"low", b.low}, {"high", b.high}};
}

void from_json(const json& j, ScaleBracket& b)
{
    j.at("low").get_to(b.low);
    j.at("high").get_to(b.high);
}

void to_json(json& j, const RelaxationResult& r)
{
    j = json{{"factor_relaxed", r.factor_relaxed},
             {"iterations", r.iterations},
             {"final_balance", r.final_balance},
             {"tolerance", r.tolerance}};
}

void from_json(const json& j, RelaxationResult& r)
{
    j.at("factor_relaxed").get_to(r.factor_relaxed);
    j.at("iterations").get_to(r.iterations);
    j.at("final_balance").get_to(r.final_balance);
    j.at("tolerance").get_to(r.tolerance);
}

void to_json(json& j, const MethodSweep& m)
{
    j = json{{"rows", m.rows},
             {"chosen_rate_unscaled", m.chosen_rate_unscaled},
             {"chosen_rate_scaled", m.chosen_rate_scaled},
             {"chosen_scale", m.chosen_scale},
             {"bracket", opt_json(m.bracket)},
             {"relaxation", opt_json(m.relaxation)},
             {"relaxation_error", m.relaxation_error}};
}

void from_json(const json& j, MethodSweep& m)
{
    j.at("rows").get_to(m.rows);
    j.at("chosen_rate_unscaled").get_to(m.chosen_rate_unscaled);
    j.at("chosen_rate_scaled").get_to(m.chosen_rate_scaled);
    j.at("chosen_scale").get_to(m.chosen_scale);
    m.bracket = opt_from<ScaleBracket>(j, "bracket");
    m.relaxation = opt_from<RelaxationResult>(j, "relaxation");
    j.at("relaxation_error").get_to(m.relaxation_error);
}

void to_json(json& j, const SweepReport& s)
{
    j = json{{"injected", s.injected}, {"embedded", opt_json(s.embedded)}};
}

void from_json(const json& j, SweepReport& s)
{
    j.at("injected").get_to(s.injected);
    s.embedded = opt_from<MethodSweep>(j, "embedded");
}

void to_json(json& j, const TestMetrics& t)
{
    j = json{{"rate_unscaled", t.rate_unscaled},
             {"rate_scaled", t.rate_scaled},
             {"scale", t.scale},
             {"relaxed_scale", opt_json(t.relaxed_scale)},
             {"rmse", t.rmse},
             {"nll_unscaled", t.nll_unscaled},
             {"nll_scaled", t.nll_scaled},
             {"nll_relaxed", opt_json(t.nll_relaxed)},
             {"ma_unscaled", t.ma_unscaled},
             {"ma_scaled", t.ma_scaled},
             {"ma_relaxed", opt_json(t.ma_relaxed)},
             {"rmse_at_unscaled_rate", t.rmse_at_unscaled_rate},
             {"nll_at_unscaled_rate", t.nll_at_unscaled_rate},
             {"ma_at_unscaled_rate", t.ma_at_unscaled_rate},
             {"curve_unscaled", t.curve_unscaled},
             {"curve_scaled", t.curve_scaled},
             {"curve_relaxed", opt_json(t.curve_relaxed)}};
}

void from_json(const json& j, TestMetrics& t)
{
    j.at("rate_unscaled").get_to(t.rate_unscaled);
    j.at("rate_scaled").get_to(t.rate_scaled);
    j.at("scale").get_to(t.scale);
    t.relaxed_scale = opt_from<double>(j, "relaxed_scale");
    j.at("rmse").get_to(t.rmse);
    j.at("nll_unscaled").get_to(t.nll_unscaled);
    j.at("nll_scaled").get_to(t.nll_scaled);
    t.nll_relaxed = opt_from<double>(j, "nll_relaxed");
    j.at("ma_unscaled").get_to(t.ma_unscaled);
    j.at("ma_scaled").get_to(t.ma_scaled);
    t.ma_relaxed = opt_from<double>(j, "ma_relaxed");
    j.at("rmse_at_unscaled_rate").get_to(t.rmse_at_unscaled_rate);
    j.at("nll_at_unscaled_rate").get_to(t.nll_at_unscaled_rate);
    j.at("ma_at_unscaled_rate").get_to(t.ma_at_unscaled_rate);
    j.at("curve_unscaled").get_to(t.curve_unscaled);
    j.at("curve_scaled").get_to(t.curve_scaled);
    t.curve_relaxed = opt_from<CalibrationCurve>(j, "curve_relaxed");
}

void to_json(json& j, const RepeatReport& r)
{
    j = json{{"repeat", r.repeat},
             {"seed", r.seed},
             {"n_fit", r.n_fit},
             {"n_validation", r.n_validation},
             {"n_test", r.n_test},
             {"sweep", r.sweep},
             {"injected", r.injected},
             {"embedded", opt_json(r.embedded)}};
}

void from_json(const json& j, RepeatReport& r)
{
    j.at("repeat").get_to(r.repeat);
    j.at("seed").get_to(r.seed);
    j.at("n_fit").get_to(r.n_fit);
    j.at("n_validation").get_to(r.n_validation);
    j.at("n_test").get_to(r.n_test);
    j.at("sweep").get_to(r.sweep);
    j.at("injected").get_to(r.injected);
    r.embedded = opt_from<TestMetrics>(j, "embedded");
}

void to_json(json& j, const ExperimentConfig& c)
{
    j = json{{"test_fraction", c.split.test_fraction},
             {"validation_fraction_of_train", c.split.validation_fraction_of_train},
             {"repeats", c.split.repeats},
             {"base_seed", c.split.base_seed},
             {"batch_size", c.train.batch_size},
             {"learning_rate", c.train.learning_rate},
             {"epochs", c.train.epochs},
             {"hidden_sizes", c.hidden_sizes},
             {"activation", std::string(to_string(c.activation))},
             {"rates", c.grid.rates()},
             {"placement", c.placement},
             {"passes", c.passes},
             {"tau", c.tau},
             {"alpha_points", c.alpha_points},
             {"embedded", c.embedded}};
}

void from_json(const json& j, ExperimentConfig& c)
{
    j.at("test_fraction").get_to(c.split.test_fraction);
    j.at("validation_fraction_of_train").get_to(c.split.validation_fraction_of_train);
    j.at("repeats").get_to(c.split.repeats);
    j.at("base_seed").get_to(c.split.base_seed);
    j.at("batch_size").get_to(c.train.batch_size);
    j.at("learning_rate").get_to(c.train.learning_rate);
    j.at("epochs").get_to(c.train.epochs);
    j.at("hidden_sizes").get_to(c.hidden_sizes);
    c.activation = activation_from_string(j.at("activation").get<std::string>());
    c.grid = RateGrid(j.at("rates").get<std::vector<double>>());
    j.at("placement").get_to(c.placement);
    j.at("passes").get_to(c.passes);
    j.at("tau").get_to(c.tau);
    j.at("alpha_points").get_to(c.alpha_points);
    j.at("embedded").get_to(c.embedded);
}

void to_json(json& j, const Aggregate& a)
{
    j = json{{"mean", a.mean}, {"std", a.std}, {"count", a.count}};
}

void from_json(const json& j, Aggregate& a)
{
    j.at("mean").get_to(a.mean);
    j.at("std").get_to(a.std);
    j.at("count").get_to(a.count);
}

void to_json(json& j, const ExperimentReport& r)
{
    j = json{{"dataset", r.dataset},
             {"n_rows", r.n_rows},
             {"n_features", r.n_features},
             {"config", r.config},
             {"repeats", r.repeats},
             {"aggregates", r.aggregates}};
}

void from_json(const json& j, ExperimentReport& r)
{
    j.at("dataset").get_to(r.dataset);
    j.at("n_rows").get_to(r.n_rows);
    j.at("n_features").get_to(r.n_features);
    j.at("config").get_to(r.config);
    j.at("repeats").get_to(r.repeats);
    j.at("aggregates").get_to(r.aggregates);
}

std::string sweep_rows_csv(const std::vector<SweepRow>& rows)
{
    std::ostringstream out;
    out << "rate,rmse,nll_unscaled,nll_scaled,scale_factor,ma_unscaled,ma_scaled,nll_ideal\n";
    for (const auto& r : rows)
        out << format_double(r.rate) << ',' << format_double(r.rmse) << ',' << format_double(r.nll_unscaled) << ','
            << format_double(r.nll_scaled) << ',' << format_double(r.scale_factor) << ','
            << format_double(r.ma_unscaled) << ',' << format_double(r.ma_scaled) << ','
            << format_double(r.nll_ideal) << '\n';
    return out.str();
}

std::string curve_csv(const CalibrationCurve& curve)
{
    std::ostringstream out;
    out << "alpha,observed\n";
    for (std::size_t m = 0; m < curve.size(); ++m)
        out << format_double(curve.alphas[m]) << ',' << format_double(curve.observed[m]) << '\n';
    return out.str();
}

std::string estimate_csv(const McEstimate<double>& estimate)
{
    std::ostringstream out;
    out << "instance_id,mean,variance\n";
    for (Index i = 0; i < estimate.mean.size(); ++i)
        out << i << ',' << format_double(estimate.mean[i]) << ',' << format_double(estimate.variance[i]) << '\n';
    return out.str();
}

std::string metrics_summary_json(double rmse, double nll, double ma, double balance)
{
    return json{{"rmse", rmse}, {"nll", nll}, {"ma", ma}, {"balance", balance}}.dump(2) + "\n";
}

std::string scale_json(const ScaleResult& scale, const ScaleBracket* bracket, const RelaxationResult* relaxation)
{
    json j{{"factor", scale.factor}, {"nll_unscaled", scale.nll_unscaled}, {"nll_scaled", scale.nll_scaled}};
    j["bracket"] = bracket ? json(*bracket) : json(nullptr);
    j["relaxation"] = relaxation ? json(*relaxation) : json(nullptr);
    return j.dump(2) + "\n";
}

std::string sweep_report_json(const SweepReport& report)
{
    return json(report).dump(2) + "\n";
}

std::string experiment_report_json(const ExperimentReport& report)
{
    return json(report).dump(2) + "\n";
}

ExperimentReport experiment_report_from_json(const std::string& text)
{
    try {
        return json::parse(text).get<ExperimentReport>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed experiment report: ") + e.what());
    }
}

std::vector<std::string> export_report(const ExperimentReport& report, const std::string& out_dir)
{
    if (report.repeats.empty()) throw ValidationError("refusing to export a report with zero repeats");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());

    std::vector<std::string> files;
    auto emit = [&](const std::string& name, const std::string& content) {
        write_file_atomic(fs::path(out_dir) / name, content);
        files.push_back(name);
    };

    emit("report.json", experiment_report_json(report));

    json summary{{"dataset", report.dataset}, {"repeats", report.repeats.size()}, {"aggregates", report.aggregates}};
    json per_repeat = json::array();
    for (const auto& r : report.repeats) {
        json e{{"repeat", r.repeat}, {"injected", r.injected}};
        e["injected"].erase("curve_unscaled");
        e["injected"].erase("curve_scaled");
        e["injected"].erase("curve_relaxed");
        if (r.embedded) {
            e["embedded"] = *r.embedded;
            e["embedded"].erase("curve_unscaled");
            e["embedded"].erase("curve_scaled");
            e["embedded"].erase("curve_relaxed");
        }
        per_repeat.push_back(std::move(e));
    }
    summary["per_repeat"] = std::move(per_repeat);
    emit("summary.json", summary.dump(2) + "\n");

    for (const auto& r : report.repeats) {
        char prefix[32];
        std::snprintf(prefix, sizeof prefix, "repeat_%02zu", r.repeat);
        auto method_files = [&](const std::string& method, const MethodSweep& sweep, const TestMetrics& test) {
            const std::string base = std::string(prefix) + "_" + method;
            emit(base + "_sweep.csv", sweep_rows_csv(sweep.rows));
            emit(base + "_curve_unscaled.csv", curve_csv(test.curve_unscaled));
            emit(base + "_curve_scaled.csv", curve_csv(test.curve_scaled));
            if (test.curve_relaxed) emit(base + "_curve_relaxed.csv", curve_csv(*test.curve_relaxed));
        };
        method_files("injected", r.sweep.injected, r.injected);
        if (r.sweep.embedded && r.embedded) method_files("embedded", *r.sweep.embedded, *r.embedded);
    }

    const json manifest{{"dataset", report.dataset}, {"files", files}};
    write_file_atomic(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
    return files;
}

} // namespace dropinj
