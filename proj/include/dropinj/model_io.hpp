#pragma once

#include <optional>
#include <string>

#include "dropinj/dataset.hpp"
#include "dropinj/mlp.hpp"

namespace dropinj {

/// JSON document {layer_sizes, activation, weights, biases}; weights are
/// row-major per layer. Doubles round-trip exactly.
std::string model_to_json(const MlpModel<double>& model, const Standardizer* standardizer = nullptr);

struct LoadedModel {
    MlpModel<double> model;
    std::optional<Standardizer> standardizer;
};

LoadedModel model_from_json(const std::string& text);

void save_model(const std::string& path, const MlpModel<double>& model, const Standardizer* standardizer = nullptr);
LoadedModel load_model(const std::string& path);

} // namespace dropinj
