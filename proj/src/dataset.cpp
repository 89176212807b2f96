#include "dropinj/dataset.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dropinj/errors.hpp"
#include "dropinj/text_io.hpp"

namespace dropinj {

void Dataset::validate() const
{
    if (features.rows() == 0 || features.cols() == 0) throw EmptyDataError("dataset '" + name + "' is empty");
    if (targets.size() != features.rows()) throw InputShapeError("dataset targets and features disagree");
    if (!features.allFinite() || !targets.allFinite())
        throw ValidationError("dataset '" + name + "' contains NaN or Inf");
    if (!feature_names.empty() && static_cast<Index>(feature_names.size()) != features.cols())
        throw InputShapeError("feature name count does not match feature columns");
}

Dataset Dataset::subset(const std::vector<Index>& rows) const
{
    Dataset out;
    out.name = name;
    out.feature_names = feature_names;
    out.features.resize(static_cast<Index>(rows.size()), features.cols());
    out.targets.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.features.row(static_cast<Index>(i)) = features.row(rows[i]);
        out.targets[static_cast<Index>(i)] = targets[rows[i]];
    }
    return out;
}

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_cells(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_number(std::string_view cell, double& out)
{
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

} // namespace

Dataset load_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'", 0);

    Dataset data;
    data.name = std::filesystem::path(path).stem().string();
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_cells(line);
        if (width == 0) {
            width = cells.size();
            if (width < 2) throw ParseError("row " + std::to_string(line_no) + ": need at least one feature and a target", line_no);
        } else if (cells.size() != width) {
            throw ParseError("row " + std::to_string(line_no) + ": expected " + std::to_string(width) + " columns, found "
                                 + std::to_string(cells.size()),
                             line_no);
        }
        std::vector<double> values(width);
        bool numeric = true;
        for (std::size_t c = 0; c < width && numeric; ++c) numeric = parse_number(cells[c], values[c]);
        if (!numeric && first) {
            bool any_number = false;
            double dummy;
            for (auto cell : cells) {
                if (cell.empty()) throw ParseError("row " + std::to_string(line_no) + ": empty header cell", line_no);
                any_number = any_number || parse_number(cell, dummy);
            }
            if (!any_number) {
                for (std::size_t c = 0; c + 1 < width; ++c) data.feature_names.emplace_back(cells[c]);
                first = false;
                continue;
            }
        }
        first = false;
        if (!numeric) {
            for (std::size_t c = 0; c < width; ++c) {
                double v;
                if (cells[c].empty())
                    throw ParseError("row " + std::to_string(line_no) + ": missing value in column " + std::to_string(c + 1),
                                     line_no);
                if (!parse_number(cells[c], v))
                    throw ParseError("row " + std::to_string(line_no) + ": non-numeric cell '" + std::string(cells[c])
                                         + "' in column " + std::to_string(c + 1),
                                     line_no);
            }
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw ParseError("'" + path + "' has no data rows", line_no);

    const auto n = static_cast<Index>(rows.size());
    const auto d = static_cast<Index>(width - 1);
    data.features.resize(n, d);
    data.targets.resize(n);
    for (Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        for (Index j = 0; j < d; ++j) data.features(i, j) = r[static_cast<std::size_t>(j)];
        data.targets[i] = r.back();
    }
    data.validate();
    return data;
}

void save_csv(const Dataset& data, const std::string& path)
{
    std::ostringstream out;
    if (!data.feature_names.empty()) {
        for (const auto& n : data.feature_names) out << n << ',';
        out << "target\n";
    }
    for (Index i = 0; i < data.size(); ++i) {
        for (Index j = 0; j < data.dim(); ++j) out << format_double(data.features(i, j)) << ',';
        out << format_double(data.targets[i]) << '\n';
    }
    write_file_atomic(path, out.str());
}

Standardizer Standardizer::fit(const MatrixXd& features, const VectorXd& targets)
{
    if (features.rows() == 0) throw EmptyDataError("cannot standardize an empty split");
    const auto n = static_cast<double>(features.rows());
    Standardizer s;
    s.feature_mean = features.colwise().mean().transpose();
    s.feature_scale.resize(features.cols());
    for (Index j = 0; j < features.cols(); ++j) {
        if ((features.col(j).array() == features(0, j)).all()) {
            // exact centre, so a constant column maps to exact zeros
            s.feature_mean[j] = features(0, j);
            s.feature_scale[j] = 1.0;
            continue;
        }
        const double var = (features.col(j).array() - s.feature_mean[j]).square().sum() / n;
        const double sd = std::sqrt(var);
        s.feature_scale[j] = sd > 0.0 ? sd : 1.0;
    }
    s.target_mean = targets.mean();
    const double sd = std::sqrt((targets.array() - s.target_mean).square().sum() / n);
    s.target_scale = sd > 0.0 ? sd : 1.0;
    return s;
}

MatrixXd Standardizer::transform_features(const MatrixXd& features) const
{
    if (features.cols() != feature_mean.size()) throw InputShapeError("standardizer fitted on a different width");
    MatrixXd out = features.rowwise() - feature_mean.transpose();
    out.array().rowwise() /= feature_scale.transpose().array();
    return out;
}

VectorXd Standardizer::transform_targets(const VectorXd& targets) const
{
    return ((targets.array() - target_mean) / target_scale).matrix();
}

Dataset Standardizer::transform(const Dataset& data) const
{
    Dataset out = data;
    out.features = transform_features(data.features);
    out.targets = transform_targets(data.targets);
    return out;
}

VectorXd Standardizer::inverse_targets(const VectorXd& targets) const
{
    return (targets.array() * target_scale + target_mean).matrix();
}

VectorXd Standardizer::inverse_variances(const VectorXd& variances) const
{
    return (variances.array() * (target_scale * target_scale)).matrix();
}

} // namespace dropinj
