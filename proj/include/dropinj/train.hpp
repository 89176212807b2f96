#pragma once

#include <numeric>
#include <optional>
#include <vector>

#include "dropinj/mlp.hpp"

namespace dropinj {

/// Mini-batch SGD on mean squared error. A present `dropout` means embedded
/// dropout: a fresh mask is drawn for every mini-batch step.
struct TrainConfig {
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    std::size_t epochs = 100;
    Seed seed = 0;
    std::optional<DropoutConfig> dropout;

    void validate() const
    {
        if (batch_size == 0) throw ValidationError("batch_size must be positive");
        if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
        if (epochs == 0) throw ValidationError("epochs must be positive");
    }
};

template <class Scalar>
struct Gradients {
    std::vector<Matrix<Scalar>> weights;
    std::vector<Vector<Scalar>> biases;
};

/// MSE loss (mean over rows) and its gradient w.r.t. every parameter, with an
/// optional dropout mask shared by the whole batch.
template <class Scalar, class DX, class DY>
Scalar loss_and_gradient(const MlpModel<Scalar>& model, const Eigen::MatrixBase<DX>& x,
                         const Eigen::MatrixBase<DY>& y, const DropoutMask<Scalar>* mask, Gradients<Scalar>& grad)
{
    const Index n = x.rows();
    if (n == 0) throw EmptyDataError("empty batch");
    if (y.size() != n) throw InputShapeError("targets and features disagree on row count");

    std::vector<Matrix<Scalar>> pre, post;
    const Vector<Scalar> pred = detail::propagate<Scalar>(model, x.transpose(), mask, &pre, &post);
    const Vector<Scalar> resid = pred - y;
    const Scalar loss = resid.squaredNorm() / static_cast<Scalar>(n);

    const std::size_t L = model.num_layers();
    grad.weights.resize(L);
    grad.biases.resize(L);

    // d loss / d output, as a 1 x N row
    Matrix<Scalar> delta = (resid * (Scalar(2) / static_cast<Scalar>(n))).transpose();
    for (std::size_t l = L; l-- > 0;) {
        grad.weights[l] = delta * post[l].transpose();
        grad.biases[l] = delta.rowwise().sum();
        if (l == 0) break;
        Matrix<Scalar> back = model.weights[l].transpose() * delta;
        const std::size_t h = l - 1;
        if (mask && mask->layers[h].size() != 0) {
            const Vector<Scalar> scale = mask->layers[h] * mask->keep_scale();
            back.array().colwise() *= scale.array();
        }
        if (model.hidden_activation == Activation::relu)
            back.array() *= (pre[h].array() > Scalar(0)).template cast<Scalar>();
        else
            back.array() *= Scalar(1) - pre[h].array().tanh().square();
        delta = std::move(back);
    }
    return loss;
}

/// Trains `model` in place. Deterministic given `config.seed`.
template <class Scalar, class DX, class DY>
void fit(MlpModel<Scalar>& model, const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
         const TrainConfig& config)
{
    config.validate();
    model.validate();
    const Index n = x.rows();
    if (n == 0) throw EmptyDataError("training set is empty");
    if (y.size() != n) throw InputShapeError("targets and features disagree on row count");
    if (x.cols() != model.input_dim()) throw InputShapeError("training features do not match model input dim");
    if (config.dropout) masked_layers(*config.dropout, model);

    Stream shuffle(derive_seed(config.seed, StreamTag::shuffle));
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});

    const auto batch = static_cast<Index>(config.batch_size);
    Matrix<Scalar> xb;
    Vector<Scalar> yb;
    Gradients<Scalar> grad;
    std::uint64_t step = 0;
    const auto lr = static_cast<Scalar>(config.learning_rate);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle.below(i)]);

        Scalar epoch_loss = 0;
        for (Index start = 0; start < n; start += batch) {
            const Index len = std::min(batch, n - start);
            xb.resize(len, x.cols());
            yb.resize(len);
            for (Index r = 0; r < len; ++r) {
                const Index src = order[static_cast<std::size_t>(start + r)];
                xb.row(r) = x.row(src);
                yb[r] = y[src];
            }
            std::optional<DropoutMask<Scalar>> mask;
            if (config.dropout)
                mask = sample_mask(*config.dropout, model, derive_seed(config.seed, StreamTag::train_mask, {step}));
            ++step;

            const Scalar loss = loss_and_gradient(model, xb, yb, mask ? &*mask : nullptr, grad);
            epoch_loss += loss * static_cast<Scalar>(len);
            for (std::size_t l = 0; l < model.num_layers(); ++l) {
                model.weights[l] -= lr * grad.weights[l];
                model.biases[l] -= lr * grad.biases[l];
            }
        }
        if (!std::isfinite(static_cast<double>(epoch_loss))) throw DivergedTrainingError(epoch);
    }
    for (std::size_t l = 0; l < model.num_layers(); ++l)
        if (!model.weights[l].allFinite() || !model.biases[l].allFinite())
            throw DivergedTrainingError(config.epochs);
}

/// Builds a Glorot-initialised model of the given shape and trains it.
template <class Scalar = double, class DX, class DY>
MlpModel<Scalar> train(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                       const std::vector<Index>& hidden_sizes, Activation act, const TrainConfig& config,
                       Seed init_seed)
{
    std::vector<Index> sizes;
    sizes.push_back(x.cols());
    sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
    sizes.push_back(1);
    auto model = make_model<Scalar>(std::move(sizes), act, init_seed);
    fit(model, x, y, config);
    return model;
}

} // namespace dropinj
