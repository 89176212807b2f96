#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "dropinj/errors.hpp"
#include "dropinj/rng.hpp"
#include "dropinj/types.hpp"

namespace dropinj {

enum class Activation { relu, tanh };

inline std::string_view to_string(Activation a)
{
    return a == Activation::relu ? "relu" : "tanh";
}

inline Activation activation_from_string(std::string_view s)
{
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw ValidationError("unknown activation '" + std::string(s) + "' (expected relu|tanh)");
}

/// Feed-forward regressor: D inputs, any number of hidden layers, one linear
/// output. weights[l] maps layer l to layer l+1 and has shape
/// (layer_sizes[l+1] x layer_sizes[l]).
template <class Scalar>
struct MlpModel {
    std::vector<Index> layer_sizes;
    std::vector<Matrix<Scalar>> weights;
    std::vector<Vector<Scalar>> biases;
    Activation hidden_activation = Activation::relu;

    Index input_dim() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
    std::size_t num_layers() const { return weights.size(); }
    std::size_t num_hidden() const { return layer_sizes.size() < 2 ? 0 : layer_sizes.size() - 2; }

    /// Throws InputShapeError/ValidationError when an invariant is broken.
    void validate() const
    {
        if (layer_sizes.size() < 2) throw ValidationError("model needs at least input and output layers");
        if (layer_sizes.back() != 1) throw ValidationError("output layer must have width 1");
        for (auto s : layer_sizes)
            if (s <= 0) throw ValidationError("layer sizes must be positive");
        if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size())
            throw InputShapeError("weights/biases count does not match layer_sizes");
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l])
                throw InputShapeError("weight matrix " + std::to_string(l) + " has wrong shape");
            if (biases[l].size() != layer_sizes[l + 1])
                throw InputShapeError("bias vector " + std::to_string(l) + " has wrong length");
            if (!weights[l].allFinite() || !biases[l].allFinite())
                throw ValidationError("non-finite parameter in layer " + std::to_string(l));
        }
    }

    static MlpModel zeros(std::vector<Index> sizes, Activation act = Activation::relu)
    {
        MlpModel m;
        m.layer_sizes = std::move(sizes);
        m.hidden_activation = act;
        for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
            m.weights.push_back(Matrix<Scalar>::Zero(m.layer_sizes[l + 1], m.layer_sizes[l]));
            m.biases.push_back(Vector<Scalar>::Zero(m.layer_sizes[l + 1]));
        }
        m.validate();
        return m;
    }

    bool operator==(const MlpModel& o) const
    {
        if (layer_sizes != o.layer_sizes || hidden_activation != o.hidden_activation) return false;
        if (weights.size() != o.weights.size()) return false;
        for (std::size_t l = 0; l < weights.size(); ++l)
            if (weights[l] != o.weights[l] || biases[l] != o.biases[l]) return false;
        return true;
    }
};

/// Glorot-uniform weights, zero biases.
template <class Scalar = double>
MlpModel<Scalar> make_model(std::vector<Index> sizes, Activation act, Seed init_seed)
{
    auto m = MlpModel<Scalar>::zeros(std::move(sizes), act);
    Stream rng(derive_seed(init_seed, StreamTag::init));
    for (auto& w : m.weights) {
        const double s = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        // Column-major fill order is part of the reproducibility contract.
        for (Index j = 0; j < w.cols(); ++j)
            for (Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<Scalar>(rng.uniform(-s, s));
    }
    return m;
}

/// Dropout applied to hidden-layer activations. An empty placement means
/// every hidden layer; the input layer is never masked.
struct DropoutConfig {
    double rate = 0.0;
    std::vector<std::size_t> placement;
};

template <class Scalar>
std::vector<bool> masked_layers(const DropoutConfig& config, const MlpModel<Scalar>& model)
{
    if (!(config.rate >= 0.0 && config.rate < 1.0))
        throw ValidationError("dropout rate must lie in [0, 1), got " + std::to_string(config.rate));
    std::vector<bool> on(model.num_hidden(), config.placement.empty());
    for (auto idx : config.placement) {
        if (idx >= model.num_hidden())
            throw ValidationError("dropout placement index " + std::to_string(idx) + " is not a hidden layer");
        on[idx] = true;
    }
    return on;
}

/// Binary keep-vectors per hidden layer (1 = kept, 0 = dropped). Layers
/// without dropout hold an empty vector.
template <class Scalar>
struct DropoutMask {
    std::vector<Vector<Scalar>> layers;
    double rate = 0.0;
    Seed stream_seed = 0;

    Scalar keep_scale() const { return static_cast<Scalar>(1.0 / (1.0 - rate)); }
};

template <class Scalar>
DropoutMask<Scalar> sample_mask(const DropoutConfig& config, const MlpModel<Scalar>& model, Seed stream_seed)
{
    const auto on = masked_layers(config, model);
    DropoutMask<Scalar> mask;
    mask.rate = config.rate;
    mask.stream_seed = stream_seed;
    mask.layers.resize(model.num_hidden());
    Stream rng(stream_seed);
    for (std::size_t h = 0; h < on.size(); ++h) {
        if (!on[h]) continue;
        auto& z = mask.layers[h];
        z.resize(model.layer_sizes[h + 1]);
        for (Index i = 0; i < z.size(); ++i) z[i] = rng.bernoulli(config.rate) ? Scalar(0) : Scalar(1);
    }
    return mask;
}

/// All-ones mask at the given rate, i.e. nothing dropped.
template <class Scalar>
DropoutMask<Scalar> full_mask(const DropoutConfig& config, const MlpModel<Scalar>& model)
{
    const auto on = masked_layers(config, model);
    DropoutMask<Scalar> mask;
    mask.rate = config.rate;
    mask.layers.resize(model.num_hidden());
    for (std::size_t h = 0; h < on.size(); ++h)
        if (on[h]) mask.layers[h] = Vector<Scalar>::Ones(model.layer_sizes[h + 1]);
    return mask;
}

namespace detail {

template <class Scalar>
void activate(Matrix<Scalar>& z, Activation act)
{
    if (act == Activation::relu)
        z = z.cwiseMax(Scalar(0));
    else
        z = z.array().tanh().matrix();
}

template <class Scalar>
void check_mask(const MlpModel<Scalar>& model, const DropoutMask<Scalar>& mask)
{
    if (mask.layers.size() != model.num_hidden())
        throw InputShapeError("dropout mask has " + std::to_string(mask.layers.size())
                              + " layers, model has " + std::to_string(model.num_hidden()) + " hidden layers");
    for (std::size_t h = 0; h < mask.layers.size(); ++h)
        if (mask.layers[h].size() != 0 && mask.layers[h].size() != model.layer_sizes[h + 1])
            throw InputShapeError("dropout mask layer " + std::to_string(h) + " has wrong width");
}

/// Propagates columns of `a` (D x N). When `cache` is given, it receives the
/// pre-activations of each hidden layer followed by the (masked) activations
/// of every layer including the input, for backprop.
template <class Scalar>
Vector<Scalar> propagate(const MlpModel<Scalar>& model, Matrix<Scalar> a, const DropoutMask<Scalar>* mask,
                         std::vector<Matrix<Scalar>>* pre = nullptr, std::vector<Matrix<Scalar>>* post = nullptr)
{
    if (a.rows() != model.input_dim())
        throw InputShapeError("input has " + std::to_string(a.rows()) + " features, model expects "
                              + std::to_string(model.input_dim()));
    if (mask) check_mask(model, *mask);
    const std::size_t L = model.num_layers();
    if (post) post->push_back(a);
    for (std::size_t l = 0; l + 1 < L; ++l) {
        Matrix<Scalar> z = model.weights[l] * a;
        z.colwise() += model.biases[l];
        if (pre) pre->push_back(z);
        activate(z, model.hidden_activation);
        if (mask && mask->layers[l].size() != 0) {
            const Vector<Scalar> scale = mask->layers[l] * mask->keep_scale();
            z.array().colwise() *= scale.array();
        }
        a = std::move(z);
        if (post) post->push_back(a);
    }
    Matrix<Scalar> out = model.weights[L - 1] * a;
    out.colwise() += model.biases[L - 1];
    return out.row(0).transpose();
}

} // namespace detail

/// Deterministic predictions for the rows of `x` (N x D).
template <class Scalar, class Derived>
Vector<Scalar> forward_batch(const MlpModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x)
{
    return detail::propagate<Scalar>(model, x.transpose(), nullptr);
}

/// Deterministic prediction for one feature vector.
template <class Scalar, class Derived>
Scalar forward(const MlpModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x)
{
    if (x.cols() != 1 && x.rows() != 1) throw InputShapeError("forward expects a single feature vector");
    Matrix<Scalar> col = x.reshaped(x.size(), 1);
    return detail::propagate<Scalar>(model, std::move(col), nullptr)[0];
}

/// Predictions for the rows of `x` with one shared dropout mask. Kept units
/// are rescaled by 1/(1-rate).
template <class Scalar, class Derived>
Vector<Scalar> forward_dropout_batch(const MlpModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x,
                                     const DropoutMask<Scalar>& mask)
{
    return detail::propagate<Scalar>(model, x.transpose(), &mask);
}

template <class Scalar, class Derived>
Scalar forward_dropout(const MlpModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x,
                       const DropoutMask<Scalar>& mask)
{
    if (x.cols() != 1 && x.rows() != 1) throw InputShapeError("forward_dropout expects a single feature vector");
    Matrix<Scalar> col = x.reshaped(x.size(), 1);
    return detail::propagate<Scalar>(model, std::move(col), &mask)[0];
}

} // namespace dropinj
