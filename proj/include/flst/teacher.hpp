#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "flst/embedding.hpp"
#include "flst/errors.hpp"
#include "flst/mlp.hpp"
#include "flst/rng.hpp"

namespace flst {

struct Transition {
    std::vector<double> state;
    double a1 = 0.0, a2 = 0.0;
    double reward = 0.0;
    std::vector<double> next_state;
};

// Bounded FIFO replay memory.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Transition t) {
        if (buffer_.size() < capacity_) {
            buffer_.push_back(std::move(t));
        } else {
            buffer_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return buffer_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return buffer_[i]; }

    std::vector<Transition> sample(std::size_t count, Rng& rng) const {
        std::vector<Transition> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            out.push_back(buffer_[rng.uniform_index(buffer_.size())]);
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> buffer_;
};

struct TeacherConfig {
    std::vector<std::size_t> actor_hidden{150, 150};
    std::vector<std::size_t> critic_hidden{150, 150};
    double gamma = 0.95;
    std::size_t target_refresh_k = 100;
    std::size_t replay_capacity = 10000;
    std::size_t minibatch_size = 64;
    double exploration_noise_std = 0.1;
    double actor_lr = 1e-3;
    double critic_lr = 1e-3;
    double momentum = 0.0;
};

// Node-local actor-critic agent over the two-component curriculum-window
// action space. The actor ends in tanh, so raw outputs already lie in
// [-1,1]^2; the critic scores state+action pairs. Frozen target copies supply
// the bootstrap value and are refreshed every target_refresh_k learner steps.
struct Teacher {
    Mlp actor;
    Mlp critic;
    Mlp target_actor;
    Mlp target_critic;
    ReplayBuffer replay{10000};
    OptimizerState actor_opt;
    OptimizerState critic_opt;
    double gamma = 0.95;
    std::size_t target_refresh_k = 100;
    std::size_t minibatch_size = 64;
    double exploration_noise_std = 0.1;
    std::size_t learner_steps = 0;

    std::size_t state_dim() const { return actor.input_size(); }
};

inline Teacher make_teacher(std::size_t state_dim, const TeacherConfig& cfg, std::uint64_t seed) {
    if (state_dim == 0) throw ConfigError("make_teacher: state_dim must be positive");
    Teacher t;
    Rng rng(seed);

    std::vector<std::size_t> actor_sizes{state_dim};
    actor_sizes.insert(actor_sizes.end(), cfg.actor_hidden.begin(), cfg.actor_hidden.end());
    actor_sizes.push_back(2);
    std::vector<Activation> actor_acts(cfg.actor_hidden.size(), Activation::Relu);
    actor_acts.push_back(Activation::Tanh);
    t.actor = mlp_init(actor_sizes, actor_acts, rng.next_u64());

    std::vector<std::size_t> critic_sizes{state_dim + 2};
    critic_sizes.insert(critic_sizes.end(), cfg.critic_hidden.begin(), cfg.critic_hidden.end());
    critic_sizes.push_back(1);
    std::vector<Activation> critic_acts(cfg.critic_hidden.size(), Activation::Relu);
    critic_acts.push_back(Activation::Linear);
    t.critic = mlp_init(critic_sizes, critic_acts, rng.next_u64());

    t.target_actor = t.actor;
    t.target_critic = t.critic;
    t.replay = ReplayBuffer(cfg.replay_capacity);
    t.actor_opt = make_optimizer(t.actor, cfg.actor_lr, cfg.momentum);
    t.critic_opt = make_optimizer(t.critic, cfg.critic_lr, cfg.momentum);
    t.gamma = cfg.gamma;
    t.target_refresh_k = cfg.target_refresh_k;
    t.minibatch_size = cfg.minibatch_size;
    t.exploration_noise_std = cfg.exploration_noise_std;
    return t;
}

// Deterministic policy output, optionally perturbed with seeded Gaussian
// exploration noise. Components always land in [-1,1].
inline std::pair<double, double> teacher_act(const Teacher& t, const StudentState& s,
                                             bool explore, Rng& rng) {
    if (s.dim() != t.state_dim())
        throw ShapeError("teacher_act: state dim " + std::to_string(s.dim()) +
                         " does not match actor input " + std::to_string(t.state_dim()));
    const auto acts = forward(t.actor, state_as_row(s));
    double a1 = acts.back().at(0, 0);
    double a2 = acts.back().at(0, 1);
    if (explore) {
        a1 += rng.normal(0.0, t.exploration_noise_std);
        a2 += rng.normal(0.0, t.exploration_noise_std);
    }
    return {std::clamp(a1, -1.0, 1.0), std::clamp(a2, -1.0, 1.0)};
}

// Reward is the change in the node-local validation metric across the student
// update (accuracy delta for classification; callers pass negated losses for
// regression so that improvement stays positive).
inline double compute_reward(double val_metric_before, double val_metric_after) {
    return val_metric_after - val_metric_before;
}

namespace teacher_detail {

inline Matrix states_matrix(const std::vector<Transition>& batch, bool next, std::size_t dim) {
    Matrix m(batch.size(), dim);
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const auto& src = next ? batch[r].next_state : batch[r].state;
        if (src.size() != dim) throw ShapeError("replay transition state dim mismatch");
        double* dst = m.row(r);
        for (std::size_t c = 0; c < dim; ++c) dst[c] = src[c];
    }
    return m;
}

inline Matrix concat_cols(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, a.cols + b.cols);
    for (std::size_t r = 0; r < a.rows; ++r) {
        double* dst = out.row(r);
        const double* ar = a.row(r);
        const double* br = b.row(r);
        for (std::size_t c = 0; c < a.cols; ++c) dst[c] = ar[c];
        for (std::size_t c = 0; c < b.cols; ++c) dst[a.cols + c] = br[c];
    }
    return out;
}

} // namespace teacher_detail

// One critic step on an explicit minibatch: squared TD error against the
// frozen-target bootstrap value Q'(s', actor'(s')). Returns the pre-step loss.
inline double critic_update_on(Teacher& t, const std::vector<Transition>& batch) {
    using namespace teacher_detail;
    if (batch.empty()) throw ConfigError("critic_update: empty minibatch");
    const std::size_t dim = t.state_dim();
    const Matrix s = states_matrix(batch, false, dim);
    const Matrix s_next = states_matrix(batch, true, dim);

    Matrix actions(batch.size(), 2);
    for (std::size_t r = 0; r < batch.size(); ++r) {
        actions.at(r, 0) = batch[r].a1;
        actions.at(r, 1) = batch[r].a2;
    }

    const Matrix next_actions = forward(t.target_actor, s_next).back();
    const Matrix next_q = forward(t.target_critic, concat_cols(s_next, next_actions)).back();
    Matrix target(batch.size(), 1);
    for (std::size_t r = 0; r < batch.size(); ++r)
        target.at(r, 0) = batch[r].reward + t.gamma * next_q.at(r, 0);

    const auto acts = forward(t.critic, concat_cols(s, actions));
    const auto loss = loss_eval(LossKind::Mse, acts.back(), target);
    const auto grads = backward(t.critic, acts, loss.output_grad);
    sgd_step(t.critic, grads, t.critic_opt);
    return loss.loss;
}

// Samples a minibatch from replay; empty optional signals "not enough replay,
// no update".
inline std::optional<double> critic_update(Teacher& t, Rng& rng) {
    if (t.replay.size() < t.minibatch_size) return std::nullopt;
    return critic_update_on(t, t.replay.sample(t.minibatch_size, rng));
}

// One deterministic-policy-gradient step on an explicit state minibatch:
// ascend mean_i Q(s_i, actor(s_i)) by chaining dQ/da through the actor.
// Returns the mean Q before the step.
inline double actor_update_on(Teacher& t, const Matrix& states) {
    using namespace teacher_detail;
    if (states.rows == 0) throw ConfigError("actor_update: empty minibatch");
    const auto actor_acts = forward(t.actor, states);
    const Matrix& actions = actor_acts.back();

    const auto critic_acts = forward(t.critic, concat_cols(states, actions));
    const double mean_q = [&] {
        double sum = 0.0;
        for (std::size_t r = 0; r < critic_acts.back().rows; ++r)
            sum += critic_acts.back().at(r, 0);
        return sum / static_cast<double>(critic_acts.back().rows);
    }();

    Matrix q_grad(states.rows, 1, 1.0 / static_cast<double>(states.rows));
    Matrix critic_input_grad;
    backward(t.critic, critic_acts, q_grad, &critic_input_grad);

    // Gradient of mean Q w.r.t. the action columns; negate to ascend with a
    // descent optimizer.
    Matrix action_grad(states.rows, 2);
    for (std::size_t r = 0; r < states.rows; ++r) {
        action_grad.at(r, 0) = -critic_input_grad.at(r, states.cols);
        action_grad.at(r, 1) = -critic_input_grad.at(r, states.cols + 1);
    }
    const auto actor_grads = backward(t.actor, actor_acts, action_grad);
    sgd_step(t.actor, actor_grads, t.actor_opt);
    return mean_q;
}

inline std::optional<double> actor_update(Teacher& t, Rng& rng) {
    if (t.replay.size() < t.minibatch_size) return std::nullopt;
    const auto batch = t.replay.sample(t.minibatch_size, rng);
    return actor_update_on(t, teacher_detail::states_matrix(batch, false, t.state_dim()));
}

// Hard-copies learner networks into the frozen targets exactly at
// target_refresh_k boundaries.
inline void target_sync(Teacher& t, std::size_t step) {
    if (step % t.target_refresh_k == 0) {
        t.target_actor = t.actor;
        t.target_critic = t.critic;
    }
}

} // namespace flst
