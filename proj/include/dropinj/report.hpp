#pragma once

#include <string>
#include <vector>

#include "dropinj/experiment.hpp"

namespace dropinj {

/// Columns: rate, rmse, nll_unscaled, nll_scaled, scale_factor, ma_unscaled,
/// ma_scaled, nll_ideal.
std::string sweep_rows_csv(const std::vector<SweepRow>& rows);

/// Columns: alpha, observed.
std::string curve_csv(const CalibrationCurve& curve);

/// Columns: instance_id, mean, variance.
std::string estimate_csv(const McEstimate<double>& estimate);

/// {rmse, nll, ma, balance}
std::string metrics_summary_json(double rmse, double nll, double ma, double balance);

std::string scale_json(const ScaleResult& scale, const ScaleBracket* bracket, const RelaxationResult* relaxation);

std::string sweep_report_json(const SweepReport& report);

std::string experiment_report_json(const ExperimentReport& report);
ExperimentReport experiment_report_from_json(const std::string& text);

/// Writes report.json, summary.json, per-rate sweep CSVs, calibration-curve
/// CSVs (unscaled, scaled at C, scaled at C_r) and manifest.json into
/// `out_dir`. Returns the file names listed in the manifest.
std::vector<std::string> export_report(const ExperimentReport& report, const std::string& out_dir);

} // namespace dropinj
