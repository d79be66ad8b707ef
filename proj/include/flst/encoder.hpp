#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <vector>

#include "flst/dataset.hpp"
#include "flst/errors.hpp"
#include "flst/mlp.hpp"
#include "flst/rng.hpp"

namespace flst {

// Encoder half of a denoising autoencoder, shared across all nodes so every
// shard is embedded identically.
struct Encoder {
    Mlp net; // raw feature dim -> latent_dim
    std::size_t latent_dim = 0;
    double noise_level = 0.0;
};

// Trains a linear denoising autoencoder (features -> latent -> features) to
// reconstruct clean rows from rows perturbed with Gaussian noise whose
// per-feature std is noise_level times the feature's std. Returns the encoder
// half. Training that fails to improve the reconstruction error warns but
// still returns the encoder.
inline Encoder fit_encoder(const Dataset& data, std::size_t latent_dim, double noise_level,
                           std::size_t epochs, std::uint64_t seed, double learning_rate = 0.02,
                           std::size_t batch_size = 32) {
    const std::size_t d = data.features.cols;
    const std::size_t n = data.features.rows;
    if (latent_dim == 0 || latent_dim >= d)
        throw ConfigError("fit_encoder: latent_dim must lie in [1, feature_dim), got " +
                          std::to_string(latent_dim) + " for feature_dim " + std::to_string(d));
    if (n == 0) throw ConfigError("fit_encoder: empty dataset");
    if (noise_level < 0.0 || noise_level >= 1.0)
        throw ConfigError("fit_encoder: noise_level must lie in [0,1)");

    // Per-feature std of the clean data sets the noise scale.
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = data.features.row(r);
        for (std::size_t c = 0; c < d; ++c) mean[c] += row[c];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = data.features.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            const double dv = row[c] - mean[c];
            sd[c] += dv * dv;
        }
    }
    for (double& s : sd) s = std::sqrt(s / static_cast<double>(n));

    Rng rng(seed);
    Mlp auto_net = mlp_init({d, latent_dim, d}, {Activation::Linear, Activation::Linear},
                            rng.next_u64());
    OptimizerState opt = make_optimizer(auto_net, learning_rate, 0.9);

    auto reconstruction_mse = [&]() {
        const auto acts = forward(auto_net, data.features);
        return loss_eval(LossKind::Mse, acts.back(), data.features).loss;
    };
    const double initial_mse = reconstruction_mse();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        // Seeded Fisher-Yates shuffle.
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t b = std::min(batch_size, n - start);
            Matrix noisy(b, d), clean(b, d);
            for (std::size_t i = 0; i < b; ++i) {
                const double* src = data.features.row(order[start + i]);
                for (std::size_t c = 0; c < d; ++c) {
                    clean.at(i, c) = src[c];
                    double x = src[c];
                    if (noise_level > 0.0) x += rng.normal(0.0, noise_level * sd[c]);
                    noisy.at(i, c) = x;
                }
            }
            const auto acts = forward(auto_net, noisy);
            const auto loss = loss_eval(LossKind::Mse, acts.back(), clean);
            const auto grads = backward(auto_net, acts, loss.output_grad);
            sgd_step(auto_net, grads, opt);
        }
    }

    const double final_mse = reconstruction_mse();
    if (epochs > 0 && final_mse >= initial_mse)
        std::cerr << "[flst] warning: autoencoder did not improve (initial mse " << initial_mse
                  << ", final " << final_mse << ")\n";

    Encoder enc;
    enc.latent_dim = latent_dim;
    enc.noise_level = noise_level;
    enc.net.layer_sizes = {d, latent_dim};
    enc.net.activations = {Activation::Linear};
    enc.net.weights = {auto_net.weights[0]};
    enc.net.biases = {auto_net.biases[0]};
    return enc;
}

// Deterministic latent embedding; noise is a training-time device only.
inline Matrix encode_batch(const Encoder& enc, const Matrix& features) {
    if (features.cols != enc.net.input_size())
        throw ShapeError("encode_batch: feature dim " + std::to_string(features.cols) +
                         " does not match encoder input " + std::to_string(enc.net.input_size()));
    return forward(enc.net, features).back();
}

} // namespace flst
