#pragma once

// Shared oracles and builders for the test suites. Everything here is
// independent of the library's forward/backward path it is used to check.

#include <cmath>
#include <functional>
#include <vector>

#include "flst/mlp.hpp"
#include "flst/rng.hpp"

namespace flst_test {

// Naive triple-loop forward pass, kept deliberately primitive.
inline flst::Matrix naive_forward(const flst::Mlp& net, const flst::Matrix& batch) {
    flst::Matrix x = batch;
    for (std::size_t k = 0; k < net.transition_count(); ++k) {
        flst::Matrix z(x.rows, net.layer_sizes[k + 1]);
        for (std::size_t r = 0; r < x.rows; ++r)
            for (std::size_t o = 0; o < z.cols; ++o) {
                double acc = net.biases[k][o];
                for (std::size_t i = 0; i < x.cols; ++i) acc += x.at(r, i) * net.weights[k].at(o, i);
                z.at(r, o) = acc;
            }
        switch (net.activations[k]) {
            case flst::Activation::Relu:
                for (double& v : z.values) v = v > 0 ? v : 0;
                break;
            case flst::Activation::Tanh:
                for (double& v : z.values) v = std::tanh(v);
                break;
            case flst::Activation::Linear:
                break;
            case flst::Activation::Softmax:
                for (std::size_t r = 0; r < z.rows; ++r) {
                    double mx = z.at(r, 0);
                    for (std::size_t c = 1; c < z.cols; ++c) mx = std::max(mx, z.at(r, c));
                    double sum = 0;
                    for (std::size_t c = 0; c < z.cols; ++c) {
                        z.at(r, c) = std::exp(z.at(r, c) - mx);
                        sum += z.at(r, c);
                    }
                    for (std::size_t c = 0; c < z.cols; ++c) z.at(r, c) /= sum;
                }
                break;
        }
        x = std::move(z);
    }
    return x;
}

// Central finite differences over every parameter of `net` against the
// analytic gradient for the scalar loss given by `loss_fn(net)`. Returns the
// worst relative error, using max(1e-8, |analytic|, |numeric|) as scale.
inline double max_gradient_rel_error(flst::Mlp net, const flst::GradientSet& analytic,
                                     const std::function<double(const flst::Mlp&)>& loss_fn,
                                     double h = 1e-5) {
    double worst = 0.0;
    auto check = [&](double& param, double grad) {
        const double saved = param;
        param = saved + h;
        const double up = loss_fn(net);
        param = saved - h;
        const double down = loss_fn(net);
        param = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({1e-8, std::abs(grad), std::abs(numeric)});
        worst = std::max(worst, std::abs(numeric - grad) / scale);
    };
    for (std::size_t k = 0; k < net.weights.size(); ++k) {
        for (std::size_t i = 0; i < net.weights[k].values.size(); ++i)
            check(net.weights[k].values[i], analytic.weight_grads[k].values[i]);
        for (std::size_t i = 0; i < net.biases[k].size(); ++i)
            check(net.biases[k][i], analytic.bias_grads[k][i]);
    }
    return worst;
}

inline flst::Matrix random_matrix(std::size_t rows, std::size_t cols, flst::Rng& rng,
                                  double lo = -1.0, double hi = 1.0) {
    flst::Matrix m(rows, cols);
    for (double& v : m.values) v = rng.uniform(lo, hi);
    return m;
}

// True when every relu pre-activation along the forward pass stays away from
// the kink by at least `margin` (finite differences are only trustworthy at
// differentiable points).
inline bool relu_safe(const flst::Mlp& net, const flst::Matrix& batch, double margin = 1e-3) {
    flst::Matrix x = batch;
    for (std::size_t k = 0; k < net.transition_count(); ++k) {
        flst::Matrix z(x.rows, net.layer_sizes[k + 1]);
        for (std::size_t r = 0; r < x.rows; ++r)
            for (std::size_t o = 0; o < z.cols; ++o) {
                double acc = net.biases[k][o];
                for (std::size_t i = 0; i < x.cols; ++i) acc += x.at(r, i) * net.weights[k].at(o, i);
                z.at(r, o) = acc;
            }
        if (net.activations[k] == flst::Activation::Relu)
            for (double v : z.values)
                if (std::abs(v) < margin) return false;
        flst::detail::apply_activation(z, net.activations[k]);
        x = std::move(z);
    }
    return true;
}

} // namespace flst_test
