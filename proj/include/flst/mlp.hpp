#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "flst/errors.hpp"
#include "flst/matrix.hpp"
#include "flst/rng.hpp"

namespace flst {

enum class Activation { Relu, Tanh, Softmax, Linear };

inline std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Softmax: return "softmax";
        case Activation::Linear: return "linear";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    if (name == "softmax") return Activation::Softmax;
    if (name == "linear") return Activation::Linear;
    throw ConfigError("unknown activation '" + name + "'");
}

// Dense feedforward network. Weights[k] maps layer k to layer k+1 and has
// shape layer_sizes[k+1] x layer_sizes[k]; biases[k] has layer_sizes[k+1]
// entries. Value type: copying gives an independent network.
struct Mlp {
    std::vector<std::size_t> layer_sizes;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    std::vector<Activation> activations; // one per non-input layer

    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t transition_count() const { return weights.size(); }
};

struct GradientSet {
    std::vector<Matrix> weight_grads;
    std::vector<std::vector<double>> bias_grads;
};

struct OptimizerState {
    double learning_rate = 0.01;
    double momentum = 0.0;
    std::vector<Matrix> weight_velocity;
    std::vector<std::vector<double>> bias_velocity;
};

namespace detail {

inline void check_architecture(const std::vector<std::size_t>& sizes,
                               const std::vector<Activation>& acts) {
    if (sizes.size() < 2)
        throw ConfigError("network needs at least an input and an output layer");
    for (std::size_t s : sizes)
        if (s == 0) throw ConfigError("layer sizes must be positive");
    if (acts.size() != sizes.size() - 1)
        throw ConfigError("expected " + std::to_string(sizes.size() - 1) +
                          " activations, got " + std::to_string(acts.size()));
    for (std::size_t i = 0; i + 1 < acts.size(); ++i)
        if (acts[i] == Activation::Softmax)
            throw ConfigError("softmax is only allowed at the output layer");
}

} // namespace detail

inline Mlp mlp_init(const std::vector<std::size_t>& layer_sizes,
                    const std::vector<Activation>& activations, std::uint64_t seed) {
    detail::check_architecture(layer_sizes, activations);
    Mlp net;
    net.layer_sizes = layer_sizes;
    net.activations = activations;
    Rng rng(seed);
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
        const std::size_t fan_in = layer_sizes[k];
        const std::size_t fan_out = layer_sizes[k + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(fan_out, fan_in);
        for (double& v : w.values) v = rng.uniform(-bound, bound);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, 0.0);
    }
    return net;
}

inline void check_same_architecture(const Mlp& a, const Mlp& b) {
    if (a.layer_sizes != b.layer_sizes)
        throw ShapeError("network architectures differ");
}

template <typename F>
void for_each_param(Mlp& net, F&& fn) {
    for (auto& w : net.weights)
        for (double& v : w.values) fn(v);
    for (auto& b : net.biases)
        for (double& v : b) fn(v);
}

template <typename F>
void for_each_param(const Mlp& net, F&& fn) {
    for (const auto& w : net.weights)
        for (double v : w.values) fn(v);
    for (const auto& b : net.biases)
        for (double v : b) fn(v);
}

// Pairwise traversal; both nets must share one architecture.
template <typename F>
void for_each_param_pair(Mlp& dst, const Mlp& src, F&& fn) {
    check_same_architecture(dst, src);
    for (std::size_t k = 0; k < dst.weights.size(); ++k) {
        for (std::size_t i = 0; i < dst.weights[k].values.size(); ++i)
            fn(dst.weights[k].values[i], src.weights[k].values[i]);
        for (std::size_t i = 0; i < dst.biases[k].size(); ++i)
            fn(dst.biases[k][i], src.biases[k][i]);
    }
}

inline std::size_t param_count(const Mlp& net) {
    std::size_t n = 0;
    for (const auto& w : net.weights) n += w.values.size();
    for (const auto& b : net.biases) n += b.size();
    return n;
}

inline bool params_equal(const Mlp& a, const Mlp& b) {
    if (a.layer_sizes != b.layer_sizes) return false;
    for (std::size_t k = 0; k < a.weights.size(); ++k)
        if (a.weights[k].values != b.weights[k].values || a.biases[k] != b.biases[k])
            return false;
    return true;
}

namespace detail {

inline void apply_activation(Matrix& z, Activation act) {
    switch (act) {
        case Activation::Relu:
            for (double& v : z.values) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Tanh:
            for (double& v : z.values) v = std::tanh(v);
            break;
        case Activation::Linear:
            break;
        case Activation::Softmax:
            for (std::size_t r = 0; r < z.rows; ++r) {
                double* row = z.row(r);
                double mx = row[0];
                for (std::size_t c = 1; c < z.cols; ++c) mx = std::max(mx, row[c]);
                double sum = 0.0;
                for (std::size_t c = 0; c < z.cols; ++c) {
                    row[c] = std::exp(row[c] - mx);
                    sum += row[c];
                }
                for (std::size_t c = 0; c < z.cols; ++c) row[c] /= sum;
            }
            break;
    }
}

// Given dL/da and the post-activation values a, produce dL/dz in place.
inline void activation_backward(Matrix& grad, const Matrix& post, Activation act) {
    switch (act) {
        case Activation::Relu:
            for (std::size_t i = 0; i < grad.values.size(); ++i)
                if (post.values[i] <= 0.0) grad.values[i] = 0.0;
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < grad.values.size(); ++i)
                grad.values[i] *= 1.0 - post.values[i] * post.values[i];
            break;
        case Activation::Linear:
            break;
        case Activation::Softmax:
            // dL/dz_j = p_j * (g_j - sum_k g_k p_k), full Jacobian per row.
            for (std::size_t r = 0; r < grad.rows; ++r) {
                double* g = grad.row(r);
                const double* p = post.row(r);
                double dot = 0.0;
                for (std::size_t c = 0; c < grad.cols; ++c) dot += g[c] * p[c];
                for (std::size_t c = 0; c < grad.cols; ++c) g[c] = p[c] * (g[c] - dot);
            }
            break;
    }
}

} // namespace detail

// Runs the batch through the network and returns every layer's activations;
// index 0 is the input batch itself, the last entry is the network output.
inline std::vector<Matrix> forward(const Mlp& net, const Matrix& batch) {
    if (batch.cols != net.input_size())
        throw ShapeError("forward: batch has " + std::to_string(batch.cols) +
                         " columns, network input is " + std::to_string(net.input_size()));
    std::vector<Matrix> acts;
    acts.reserve(net.transition_count() + 1);
    acts.push_back(batch);
    for (std::size_t k = 0; k < net.transition_count(); ++k) {
        const Matrix& x = acts.back();
        Matrix z(batch.rows, net.layer_sizes[k + 1]);
        for (std::size_t r = 0; r < z.rows; ++r) {
            double* zr = z.row(r);
            const double* b = net.biases[k].data();
            for (std::size_t c = 0; c < z.cols; ++c) zr[c] = b[c];
        }
        matmul_abt_add(x, net.weights[k], z);
        detail::apply_activation(z, net.activations[k]);
        acts.push_back(std::move(z));
    }
    return acts;
}

// Exact backpropagation. `activations` must be the vector produced by forward
// on this same network and batch. `output_grad` is dL/d(output), sum-reduced
// over whatever reduction the loss applied. If `input_grad` is non-null it
// receives dL/d(input batch).
inline GradientSet backward(const Mlp& net, const std::vector<Matrix>& activations,
                            const Matrix& output_grad, Matrix* input_grad = nullptr) {
    const std::size_t layers = net.transition_count();
    if (activations.size() != layers + 1)
        throw ShapeError("backward: activation cache has wrong depth");
    for (std::size_t k = 0; k <= layers; ++k)
        require_shape(activations[k], activations[0].rows, net.layer_sizes[k],
                      "backward: cached activation " + std::to_string(k));
    require_shape(output_grad, activations[0].rows, net.output_size(),
                  "backward: output gradient");

    GradientSet grads;
    grads.weight_grads.resize(layers);
    grads.bias_grads.resize(layers);

    Matrix g = output_grad;
    for (std::size_t k = layers; k-- > 0;) {
        detail::activation_backward(g, activations[k + 1], net.activations[k]);
        grads.bias_grads[k].assign(net.layer_sizes[k + 1], 0.0);
        for (std::size_t r = 0; r < g.rows; ++r) {
            const double* gr = g.row(r);
            for (std::size_t c = 0; c < g.cols; ++c) grads.bias_grads[k][c] += gr[c];
        }
        grads.weight_grads[k] = Matrix(net.layer_sizes[k + 1], net.layer_sizes[k]);
        matmul_atb_add(g, activations[k], grads.weight_grads[k]);
        if (k > 0 || input_grad != nullptr) {
            Matrix gx(g.rows, net.layer_sizes[k]);
            matmul_ab_add(g, net.weights[k], gx);
            if (k == 0) {
                *input_grad = std::move(gx);
            } else {
                g = std::move(gx);
            }
        }
    }
    return grads;
}

enum class LossKind { CrossEntropy, Mse };

struct LossResult {
    double loss = 0.0;
    Matrix output_grad; // dL/d(predictions), mean-reduced over the batch
};

constexpr double kProbClamp = 1e-12;

// Mean-reduced batch losses. Cross-entropy expects row-stochastic predictions
// (softmax output) and one-hot targets; mse sums squared error over output
// dimensions and averages over rows.
inline LossResult loss_eval(LossKind kind, const Matrix& predictions, const Matrix& targets) {
    if (!predictions.same_shape(targets))
        throw ShapeError("loss_eval: predictions and targets differ in shape");
    if (predictions.rows == 0) throw ValidationError("loss_eval: empty batch");

    LossResult res;
    res.output_grad = Matrix(predictions.rows, predictions.cols);
    const double inv_b = 1.0 / static_cast<double>(predictions.rows);

    if (kind == LossKind::Mse) {
        double total = 0.0;
        for (std::size_t i = 0; i < predictions.values.size(); ++i) {
            const double d = predictions.values[i] - targets.values[i];
            total += d * d;
            res.output_grad.values[i] = 2.0 * d * inv_b;
        }
        res.loss = total * inv_b;
        return res;
    }

    double total = 0.0;
    for (std::size_t r = 0; r < predictions.rows; ++r) {
        const double* p = predictions.row(r);
        const double* t = targets.row(r);
        double psum = 0.0, tsum = 0.0;
        std::size_t hot = predictions.cols;
        for (std::size_t c = 0; c < predictions.cols; ++c) {
            psum += p[c];
            tsum += t[c];
            if (t[c] != 0.0) {
                if (t[c] != 1.0 || hot != predictions.cols)
                    throw ValidationError("loss_eval: targets must be one-hot rows");
                hot = c;
            }
        }
        if (std::abs(psum - 1.0) > 1e-6)
            throw ValidationError("loss_eval: cross-entropy needs row-stochastic predictions "
                                  "(row " + std::to_string(r) + " sums to " + std::to_string(psum) + ")");
        if (tsum != 1.0 || hot == predictions.cols)
            throw ValidationError("loss_eval: targets must be one-hot rows");
        const double clamped = std::clamp(p[hot], kProbClamp, 1.0);
        total -= std::log(clamped);
        res.output_grad.row(r)[hot] = -inv_b / clamped;
    }
    res.loss = total * inv_b;
    return res;
}

inline OptimizerState make_optimizer(const Mlp& net, double learning_rate, double momentum) {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0,1)");
    OptimizerState opt;
    opt.learning_rate = learning_rate;
    opt.momentum = momentum;
    for (const auto& w : net.weights) opt.weight_velocity.emplace_back(w.rows, w.cols);
    for (const auto& b : net.biases) opt.bias_velocity.emplace_back(b.size(), 0.0);
    return opt;
}

// Momentum SGD: v <- momentum*v + g; theta <- theta - lr*v. The velocity is an
// exponentially decayed trace of past gradients, so a parameter update equals
// lr * sum_{t'<=t} momentum^(t-t') g_{t'}. Rejects non-finite gradients before
// touching the network.
inline void sgd_step(Mlp& net, const GradientSet& grads, OptimizerState& opt) {
    if (grads.weight_grads.size() != net.weights.size() ||
        grads.bias_grads.size() != net.biases.size())
        throw ShapeError("sgd_step: gradient set does not match network");
    for (std::size_t k = 0; k < net.weights.size(); ++k) {
        if (!net.weights[k].same_shape(grads.weight_grads[k]) ||
            net.biases[k].size() != grads.bias_grads[k].size())
            throw ShapeError("sgd_step: gradient shapes differ at layer " + std::to_string(k));
        if (!grads.weight_grads[k].all_finite())
            throw NumericError("sgd_step: non-finite weight gradient, step rejected");
        for (double v : grads.bias_grads[k])
            if (!std::isfinite(v))
                throw NumericError("sgd_step: non-finite bias gradient, step rejected");
    }
    const double lr = opt.learning_rate;
    const double mu = opt.momentum;
    for (std::size_t k = 0; k < net.weights.size(); ++k) {
        auto& w = net.weights[k].values;
        auto& vw = opt.weight_velocity[k].values;
        const auto& gw = grads.weight_grads[k].values;
        for (std::size_t i = 0; i < w.size(); ++i) {
            vw[i] = mu * vw[i] + gw[i];
            w[i] -= lr * vw[i];
        }
        auto& b = net.biases[k];
        auto& vb = opt.bias_velocity[k];
        const auto& gb = grads.bias_grads[k];
        for (std::size_t i = 0; i < b.size(); ++i) {
            vb[i] = mu * vb[i] + gb[i];
            b[i] -= lr * vb[i];
        }
    }
    for (const auto& w : net.weights)
        if (!w.all_finite()) throw NumericError("sgd_step: parameters left the finite range");
}

} // namespace flst
