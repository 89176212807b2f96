#pragma once

#include <algorithm>
#include <thread>
#include <vector>

#include "dropinj/mlp.hpp"

namespace dropinj {

/// Per-instance predictive mean and (unbiased) variance from T masked passes.
template <class Scalar>
struct McEstimate {
    Vector<Scalar> mean;
    Vector<Scalar> variance;
    std::size_t passes = 0;
    double rate = 0.0;
};

/// Seed of the mask used by pass `t`; one mask is shared by all instances.
inline Seed mc_pass_seed(Seed base_seed, std::size_t t)
{
    return derive_seed(base_seed, StreamTag::mc_pass, {static_cast<std::uint64_t>(t)});
}

/// Runs `passes` stochastic forward passes over the rows of `x`. Passes may
/// be spread over `threads` workers; the result does not depend on it.
template <class Scalar, class Derived>
McEstimate<Scalar> mc_predict(const MlpModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x,
                              const DropoutConfig& dropout, std::size_t passes, Seed base_seed,
                              std::size_t threads = 1)
{
    if (passes < 2) throw ValidationError("mc_predict needs at least 2 passes, got " + std::to_string(passes));
    masked_layers(dropout, model);
    if (x.cols() != model.input_dim()) throw InputShapeError("input features do not match model input dim");

    const Index n = x.rows();
    const Matrix<Scalar> xt = x.transpose();
    // passes x instances; each pass writes only its own row
    Matrix<Scalar> samples(static_cast<Index>(passes), n);

    auto run = [&](std::size_t t) {
        const auto mask = sample_mask(dropout, model, mc_pass_seed(base_seed, t));
        samples.row(static_cast<Index>(t)) = detail::propagate<Scalar>(model, xt, &mask).transpose();
    };

    threads = std::clamp<std::size_t>(threads, 1, passes);
    if (threads == 1) {
        for (std::size_t t = 0; t < passes; ++t) run(t);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t t = w; t < passes; t += threads) run(t);
            });
    }

    McEstimate<Scalar> est;
    est.passes = passes;
    est.rate = dropout.rate;
    est.mean.resize(n);
    est.variance.resize(n);
    const auto T = static_cast<Scalar>(passes);
    for (Index i = 0; i < n; ++i) {
        // Shifted by the first pass so identical passes give zero variance exactly.
        const Scalar ref = samples(0, i);
        Scalar shift = 0;
        for (Index t = 0; t < samples.rows(); ++t) shift += samples(t, i) - ref;
        const Scalar mean = ref + shift / T;
        Scalar ss = 0;
        for (Index t = 0; t < samples.rows(); ++t) {
            const Scalar d = samples(t, i) - mean;
            ss += d * d;
        }
        est.mean[i] = mean;
        est.variance[i] = ss / (T - Scalar(1));
    }
    return est;
}

} // namespace dropinj
