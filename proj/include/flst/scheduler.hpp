#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "flst/embedding.hpp"
#include "flst/errors.hpp"
#include "flst/mlp.hpp"
#include "flst/rng.hpp"

namespace flst {

struct SchedulerConfig {
    std::vector<std::size_t> hidden{100, 100};
    double epsilon = 1e-5;
    double entropy_weight = 0.01;
    double learning_rate = 0.05; // omega
    double momentum = 0.9;       // alpha
};

// Coordinator-level agent mapping the student state to a softmax over nodes.
// Trained with a score-function estimator on the aggregated cross-node
// validation loss, plus an inverse-entropy penalty that discourages early
// collapse onto one node.
struct Scheduler {
    Mlp net;
    double epsilon = 1e-5;
    double entropy_weight = 0.01;
    OptimizerState opt;
    double baseline = 0.0;
    bool baseline_initialized = false;
};

inline Scheduler make_scheduler(std::size_t state_dim, std::size_t node_count,
                                const SchedulerConfig& cfg, std::uint64_t seed) {
    if (node_count == 0) throw ConfigError("make_scheduler: node_count must be positive");
    std::vector<std::size_t> sizes{state_dim};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(node_count);
    std::vector<Activation> acts(cfg.hidden.size(), Activation::Relu);
    acts.push_back(Activation::Softmax);
    Scheduler sc;
    sc.net = mlp_init(sizes, acts, seed);
    sc.epsilon = cfg.epsilon;
    sc.entropy_weight = cfg.entropy_weight;
    sc.opt = make_optimizer(sc.net, cfg.learning_rate, cfg.momentum);
    return sc;
}

inline std::vector<double> scheduler_probs(const Scheduler& sc, const StudentState& s) {
    const auto acts = forward(sc.net, state_as_row(s));
    return acts.back().values;
}

// Natural-log entropy with the 0*log(0) = 0 convention, so an exact one-hot
// vector has entropy zero.
inline double entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

inline double entropy_penalty(const std::vector<double>& p, double epsilon) {
    return 1.0 / (entropy(p) + epsilon);
}

// Samples a node index from a probability vector.
inline std::size_t sample_categorical(const std::vector<double>& p, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    return p.size() - 1;
}

struct SchedulerUpdateResult {
    bool applied = false;
    std::vector<double> probs;
    double advantage = 0.0;
    double entropy_value = 0.0;
};

// One scheduler step. The surrogate being minimized is
//   (meta_loss - baseline) * sum_{i in selected} log p[i]
//     + entropy_weight / (H(p) + eps),
// whose gradient w.r.t. the softmax output is pushed through the network and
// applied via the momentum trace. The baseline is a running mean of observed
// meta-losses (decay 0.9), initialized to the first observation. Non-finite
// meta-losses skip the update and report applied = false.
inline SchedulerUpdateResult scheduler_update_multi(Scheduler& sc, const StudentState& s,
                                                    const std::vector<std::size_t>& selected,
                                                    double meta_loss) {
    SchedulerUpdateResult result;
    const auto acts = forward(sc.net, state_as_row(s));
    result.probs = acts.back().values;
    result.entropy_value = entropy(result.probs);
    for (std::size_t node : selected)
        if (node >= result.probs.size())
            throw ShapeError("scheduler_update: selected node out of range");
    if (!std::isfinite(meta_loss)) return result;

    if (!sc.baseline_initialized) {
        sc.baseline = meta_loss;
        sc.baseline_initialized = true;
    }
    const double advantage = meta_loss - sc.baseline;
    result.advantage = advantage;
    sc.baseline = 0.9 * sc.baseline + 0.1 * meta_loss;

    const double h_eps = result.entropy_value + sc.epsilon;
    Matrix out_grad(1, result.probs.size());
    for (std::size_t i = 0; i < result.probs.size(); ++i) {
        const double p = std::clamp(result.probs[i], kProbClamp, 1.0);
        out_grad.values[i] = sc.entropy_weight * (std::log(p) + 1.0) / (h_eps * h_eps);
    }
    for (std::size_t node : selected) {
        const double p = std::clamp(result.probs[node], kProbClamp, 1.0);
        out_grad.values[node] += advantage / p;
    }
    const auto grads = backward(sc.net, acts, out_grad);
    sgd_step(sc.net, grads, sc.opt);
    result.applied = true;
    return result;
}

inline SchedulerUpdateResult scheduler_update(Scheduler& sc, const StudentState& s,
                                              std::size_t selected_node, double meta_loss) {
    return scheduler_update_multi(sc, s, {selected_node}, meta_loss);
}

} // namespace flst
