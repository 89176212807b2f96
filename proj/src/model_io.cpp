#include "dropinj/model_io.hpp"

#include <json.hpp>

#include "dropinj/text_io.hpp"

namespace dropinj {

using nlohmann::json;

namespace {

json vector_json(const VectorXd& v)
{
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

VectorXd vector_from(const json& j)
{
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const VectorXd>(values.data(), static_cast<Index>(values.size()));
}

} // namespace

std::string model_to_json(const MlpModel<double>& model, const Standardizer* standardizer)
{
    model.validate();
    json j;
    j["layer_sizes"] = model.layer_sizes;
    j["activation"] = std::string(to_string(model.hidden_activation));
    j["weights"] = json::array();
    j["biases"] = json::array();
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const auto& w = model.weights[l];
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(w.size()));
        for (Index r = 0; r < w.rows(); ++r)
            for (Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
        j["weights"].push_back(flat);
        j["biases"].push_back(vector_json(model.biases[l]));
    }
    if (standardizer) {
        j["standardization"] = {
            {"feature_mean", vector_json(standardizer->feature_mean)},
            {"feature_scale", vector_json(standardizer->feature_scale)},
            {"target_mean", standardizer->target_mean},
            {"target_scale", standardizer->target_scale},
        };
    }
    return j.dump(2) + "\n";
}

LoadedModel model_from_json(const std::string& text)
{
    LoadedModel out;
    try {
        const json j = json::parse(text);
        auto& m = out.model;
        m.layer_sizes = j.at("layer_sizes").get<std::vector<Index>>();
        m.hidden_activation = activation_from_string(j.at("activation").get<std::string>());
        const auto& ws = j.at("weights");
        const auto& bs = j.at("biases");
        if (m.layer_sizes.size() < 2 || ws.size() + 1 != m.layer_sizes.size() || bs.size() != ws.size())
            throw InputShapeError("model JSON: layer count mismatch");
        for (std::size_t l = 0; l < ws.size(); ++l) {
            const auto flat = ws[l].get<std::vector<double>>();
            const Index rows = m.layer_sizes[l + 1];
            const Index cols = m.layer_sizes[l];
            if (static_cast<Index>(flat.size()) != rows * cols)
                throw InputShapeError("model JSON: weight matrix " + std::to_string(l) + " has wrong size");
            MatrixXd w(rows, cols);
            for (Index r = 0; r < rows; ++r)
                for (Index c = 0; c < cols; ++c) w(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
            m.weights.push_back(std::move(w));
            m.biases.push_back(vector_from(bs[l]));
        }
        m.validate();
        if (j.contains("standardization")) {
            const auto& s = j["standardization"];
            Standardizer st;
            st.feature_mean = vector_from(s.at("feature_mean"));
            st.feature_scale = vector_from(s.at("feature_scale"));
            st.target_mean = s.at("target_mean").get<double>();
            st.target_scale = s.at("target_scale").get<double>();
            out.standardizer = st;
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed model JSON: ") + e.what());
    }
    return out;
}

void save_model(const std::string& path, const MlpModel<double>& model, const Standardizer* standardizer)
{
    write_file_atomic(path, model_to_json(model, standardizer));
}

LoadedModel load_model(const std::string& path)
{
    return model_from_json(read_file(path));
}

} // namespace dropinj
