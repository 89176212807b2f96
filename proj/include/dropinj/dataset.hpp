#pragma once

#include <string>
#include <vector>

#include "dropinj/types.hpp"

namespace dropinj {

struct Dataset {
    std::string name;
    MatrixXd features;  // N x D
    VectorXd targets;   // N
    std::vector<std::string> feature_names;

    Index size() const { return features.rows(); }
    Index dim() const { return features.cols(); }
    void validate() const;

    /// Rows in the given order.
    Dataset subset(const std::vector<Index>& rows) const;
};

/// Last column is the target. A first row that does not parse as numbers is
/// taken as a header.
Dataset load_csv(const std::string& path);

void save_csv(const Dataset& data, const std::string& path);

/// Per-column z-scoring fitted on one split. Zero-variance columns keep a
/// unit divisor and map to zero.
struct Standardizer {
    VectorXd feature_mean;
    VectorXd feature_scale;
    double target_mean = 0.0;
    double target_scale = 1.0;

    static Standardizer fit(const MatrixXd& features, const VectorXd& targets);

    MatrixXd transform_features(const MatrixXd& features) const;
    VectorXd transform_targets(const VectorXd& targets) const;
    Dataset transform(const Dataset& data) const;

    VectorXd inverse_targets(const VectorXd& targets) const;
    /// Variances back to original target units.
    VectorXd inverse_variances(const VectorXd& variances) const;
};

} // namespace dropinj
