#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <unordered_set>
#include <vector>

#include "flst/curriculum.hpp"
#include "flst/dataset.hpp"
#include "flst/datasets.hpp"
#include "flst/embedding.hpp"
#include "flst/encoder.hpp"
#include "flst/errors.hpp"
#include "flst/metrics.hpp"
#include "flst/mlp.hpp"
#include "flst/ranking.hpp"
#include "flst/rng.hpp"
#include "flst/scheduler.hpp"
#include "flst/teacher.hpp"

namespace flst {

enum class PoisonState { Clean, DataPoisoned, ModelPoisoned };
enum class SelectionMode { OneHot, TopK };

struct FederationOptions {
    SelectionMode selection_mode = SelectionMode::OneHot;
    std::size_t top_k = 1;
    std::size_t curriculum_batches = 10;
    std::size_t w_max = 0; // 0 resolves to curriculum_batches - 1
    Metric metric = Metric::Mahalanobis;
    bool rank_on_latent = false;  // rank raw features by default, encode the selected batch
    bool teacher_training = true; // joint teacher training; false freezes teachers
    bool explore = true;
    bool greedy_selection = false; // argmax instead of sampling (evaluation mode)
    double student_lr = 0.05;
    double student_momentum = 0.9;
    std::size_t eval_every = 100;

    std::size_t resolved_w_max() const {
        return w_max == 0 ? curriculum_batches - 1 : w_max;
    }
};

// One federated participant: private train/validation shards, its curriculum
// and ranking model, and a node-local teacher.
struct Node {
    std::size_t node_id = 0;
    Dataset train;
    Dataset validation;
    Curriculum curriculum;
    RankingModel ranking;
    Teacher teacher;
    PoisonState poisoned = PoisonState::Clean;

    // Latent copies of the shards when a shared encoder is active.
    Matrix encoded_train;
    Matrix encoded_validation;

    // Worst finite mean validation loss seen so far; substituted when this
    // node reports a non-finite loss.
    double worst_val_loss = -1.0;
};

struct Federation {
    std::vector<Node> nodes;
    Mlp global_student;
    OptimizerState student_opt;
    Scheduler scheduler;
    StudentEmbedder embedder;
    std::optional<Encoder> encoder;
    std::size_t class_count = 0;
    std::size_t iteration = 0;
    FederationOptions options;

    Rng scheduler_rng{0};
    Rng exploration_rng{0};
    Rng replay_rng{0};
    Rng poison_rng{0};
};

struct ValidationMetrics {
    double mean_loss = 0.0;
    double accuracy = 0.0;
};

namespace federation_detail {

inline const Matrix& node_train_features(const Federation& fed, const Node& node) {
    return fed.encoder ? node.encoded_train : node.train.features;
}

inline const Matrix& node_val_features(const Federation& fed, const Node& node) {
    return fed.encoder ? node.encoded_validation : node.validation.features;
}

inline Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), src.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* s = src.row(rows[i]);
        double* d = out.row(i);
        for (std::size_t c = 0; c < src.cols; ++c) d[c] = s[c];
    }
    return out;
}

inline void refresh_node_data_views(Federation& fed, Node& node) {
    node.ranking = fit_ranking(node.train, fed.options.metric);
    if (fed.encoder) {
        node.encoded_train = encode_batch(*fed.encoder, node.train.features);
        node.encoded_validation = encode_batch(*fed.encoder, node.validation.features);
    }
    if (fed.options.rank_on_latent && fed.encoder) {
        Dataset latent = node.train;
        latent.features = node.encoded_train;
        node.curriculum =
            build_curriculum(latent, fit_ranking(latent, fed.options.metric),
                             std::min(fed.options.curriculum_batches, node.train.size()));
    } else {
        node.curriculum = build_curriculum(
            node.train, node.ranking, std::min(fed.options.curriculum_batches, node.train.size()));
    }
}

} // namespace federation_detail

inline ValidationMetrics node_validation_metrics(const Federation& fed, const Node& node,
                                                 const Mlp& student) {
    const Matrix& features = federation_detail::node_val_features(fed, node);
    const auto acts = forward(student, features);
    const Matrix& pred = acts.back();
    const Matrix targets = one_hot(node.validation.labels, fed.class_count);
    ValidationMetrics vm;
    vm.mean_loss = loss_eval(LossKind::CrossEntropy, pred, targets).loss;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < pred.rows; ++r) {
        const double* row = pred.row(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < pred.cols; ++c)
            if (row[c] > row[best]) best = c;
        if (static_cast<int>(best) == node.validation.labels[r]) ++hits;
    }
    vm.accuracy = static_cast<double>(hits) / static_cast<double>(pred.rows);
    return vm;
}

struct InnerStepResult {
    double post_update_loss = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
    std::size_t batch_size = 0;
    StudentState state_before;
};

// Teacher-driven inner update: act on the student state, cut a curriculum
// window, take one optimizer step on it, and report the post-update loss on
// that same window.
inline InnerStepResult inner_train_step(Federation& fed, Node& node, Mlp& student,
                                        OptimizerState& opt) {
    InnerStepResult res;
    res.state_before = embed_student(student, fed.embedder);
    const auto [a1, a2] = teacher_act(node.teacher, res.state_before,
                                      fed.options.explore && fed.options.teacher_training,
                                      fed.exploration_rng);
    res.a1 = a1;
    res.a2 = a2;
    const auto window =
        select_window(node.curriculum, a1, a2,
                      std::min(fed.options.resolved_w_max(), node.curriculum.batch_count - 1));
    res.batch_size = window.size();

    const Matrix batch =
        federation_detail::gather_rows(federation_detail::node_train_features(fed, node), window);
    std::vector<int> labels(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) labels[i] = node.train.labels[window[i]];
    const Matrix targets = one_hot(labels, fed.class_count);

    const auto acts = forward(student, batch);
    const auto loss = loss_eval(LossKind::CrossEntropy, acts.back(), targets);
    if (!std::isfinite(loss.loss)) throw NumericError("inner_train_step: non-finite batch loss");
    const auto grads = backward(student, acts, loss.output_grad);
    sgd_step(student, grads, opt);

    const auto post_acts = forward(student, batch);
    res.post_update_loss = loss_eval(LossKind::CrossEntropy, post_acts.back(), targets).loss;
    if (!std::isfinite(res.post_update_loss))
        throw NumericError("inner_train_step: non-finite post-update loss");
    return res;
}

// Meta-loss assembly: the selected nodes' post-update batch losses plus the
// mean validation losses at every non-selected node. Non-finite entries are
// replaced by the node's worst historical loss.
inline double combine_meta_loss(double teacher_batch_loss, const std::vector<double>& val_losses,
                                const std::vector<std::size_t>& selected,
                                const std::vector<double>& worst_history, std::string* flag) {
    double meta = teacher_batch_loss;
    for (std::size_t n = 0; n < val_losses.size(); ++n) {
        if (std::find(selected.begin(), selected.end(), n) != selected.end()) continue;
        double v = val_losses[n];
        if (!std::isfinite(v)) {
            v = worst_history[n] > 0.0 ? worst_history[n] : 1e3;
            if (flag) *flag = "node_failure:" + std::to_string(n);
        }
        meta += v;
    }
    return meta;
}

inline double aggregate_validation_losses(Federation& fed, const Mlp& updated_student,
                                          double teacher_batch_loss,
                                          const std::vector<std::size_t>& selected,
                                          std::string* flag = nullptr) {
    std::vector<double> losses(fed.nodes.size());
    std::vector<double> worst(fed.nodes.size());
    for (std::size_t n = 0; n < fed.nodes.size(); ++n) {
        losses[n] = node_validation_metrics(fed, fed.nodes[n], updated_student).mean_loss;
        worst[n] = fed.nodes[n].worst_val_loss;
    }
    return combine_meta_loss(teacher_batch_loss, losses, selected, worst, flag);
}

// Samples k distinct nodes from the probability vector (renormalizing between
// draws), or takes the argmax set in greedy mode.
inline std::vector<std::size_t> select_nodes(const std::vector<double>& probs, std::size_t k,
                                             bool greedy, Rng& rng) {
    const std::size_t n = probs.size();
    k = std::min(k, n);
    std::vector<std::size_t> selected;
    if (greedy) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (probs[a] != probs[b]) return probs[a] > probs[b];
            return a < b;
        });
        selected.assign(order.begin(), order.begin() + k);
        std::sort(selected.begin(), selected.end());
        return selected;
    }
    std::vector<double> p = probs;
    for (std::size_t draw = 0; draw < k; ++draw) {
        double total = 0.0;
        for (double v : p) total += v;
        double u = rng.uniform() * total;
        std::size_t pick = n - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (p[i] <= 0.0) continue;
            acc += p[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        while (p[pick] <= 0.0 && pick > 0) --pick; // guard against exhausted mass
        selected.push_back(pick);
        p[pick] = 0.0;
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

// One outer iteration: embed, schedule, ship, inner-train, merge, aggregate
// validation losses, update scheduler and the selected teachers.
inline MetricsRow run_outer_iteration(Federation& fed) {
    MetricsRow row;
    row.iteration = fed.iteration;

    const StudentState s_t = embed_student(fed.global_student, fed.embedder);
    row.scheduler_probs = scheduler_probs(fed.scheduler, s_t);

    const std::size_t k =
        fed.options.selection_mode == SelectionMode::OneHot ? 1 : fed.options.top_k;
    row.selected_nodes =
        select_nodes(row.scheduler_probs, k, fed.options.greedy_selection, fed.scheduler_rng);

    // Pre-update validation accuracy at the selected nodes (teacher reward).
    std::vector<double> val_acc_before(row.selected_nodes.size());
    for (std::size_t i = 0; i < row.selected_nodes.size(); ++i)
        val_acc_before[i] =
            node_validation_metrics(fed, fed.nodes[row.selected_nodes[i]], fed.global_student)
                .accuracy;

    // Ship a copy of the global student to each selected node.
    struct LocalResult {
        Mlp student;
        OptimizerState opt;
        InnerStepResult step;
        bool ok = false;
    };
    std::vector<LocalResult> locals(row.selected_nodes.size());
    double inner_loss_sum = 0.0;
    std::size_t ok_count = 0;
    for (std::size_t i = 0; i < row.selected_nodes.size(); ++i) {
        auto& local = locals[i];
        local.student = fed.global_student;
        local.opt = fed.student_opt;
        try {
            local.step = inner_train_step(fed, fed.nodes[row.selected_nodes[i]], local.student,
                                          local.opt);
            local.ok = true;
            inner_loss_sum += local.step.post_update_loss;
            ++ok_count;
        } catch (const NumericError&) {
            local.ok = false;
            row.flag = "node_failure:" + std::to_string(row.selected_nodes[i]);
        }
    }

    // Merge. One-hot replaces the global student; top-k averages parameter
    // deltas (and velocities) from the nodes that succeeded.
    if (ok_count > 0) {
        if (row.selected_nodes.size() == 1) {
            fed.global_student = std::move(locals[0].student);
            fed.student_opt = std::move(locals[0].opt);
        } else {
            Mlp merged = fed.global_student;
            OptimizerState merged_opt = fed.student_opt;
            const double scale = 1.0 / static_cast<double>(ok_count);
            for (const auto& local : locals) {
                if (!local.ok) continue;
                for_each_param_pair(merged, local.student,
                                    [&](double& dst, double src) { dst += scale * src; });
            }
            // merged now holds G + sum(L_i)/k; subtract the extra copies of G.
            for_each_param_pair(merged, fed.global_student,
                                [&](double& dst, double src) { dst -= src; });
            for (std::size_t layer = 0; layer < merged_opt.weight_velocity.size(); ++layer) {
                auto& wv = merged_opt.weight_velocity[layer].values;
                auto& bv = merged_opt.bias_velocity[layer];
                std::fill(wv.begin(), wv.end(), 0.0);
                std::fill(bv.begin(), bv.end(), 0.0);
                for (const auto& local : locals) {
                    if (!local.ok) continue;
                    const auto& lwv = local.opt.weight_velocity[layer].values;
                    const auto& lbv = local.opt.bias_velocity[layer];
                    for (std::size_t i = 0; i < wv.size(); ++i) wv[i] += scale * lwv[i];
                    for (std::size_t i = 0; i < bv.size(); ++i) bv[i] += scale * lbv[i];
                }
            }
            fed.global_student = std::move(merged);
            fed.student_opt = std::move(merged_opt);
        }
    }

    // Cross-node validation of the (possibly) updated student.
    std::vector<double> val_losses(fed.nodes.size());
    row.node_val_accuracy.resize(fed.nodes.size());
    std::vector<double> worst(fed.nodes.size());
    for (std::size_t n = 0; n < fed.nodes.size(); ++n) {
        const auto vm = node_validation_metrics(fed, fed.nodes[n], fed.global_student);
        val_losses[n] = vm.mean_loss;
        row.node_val_accuracy[n] = vm.accuracy;
        worst[n] = fed.nodes[n].worst_val_loss;
        if (std::isfinite(vm.mean_loss))
            fed.nodes[n].worst_val_loss = std::max(fed.nodes[n].worst_val_loss, vm.mean_loss);
    }
    row.inner_loss = inner_loss_sum;
    row.meta_loss =
        combine_meta_loss(inner_loss_sum, val_losses, row.selected_nodes, worst, &row.flag);

    const auto update = scheduler_update_multi(fed.scheduler, s_t, row.selected_nodes, row.meta_loss);
    if (!update.applied && row.flag == "ok") row.flag = "scheduler_skip";

    // Teacher learning at the selected nodes.
    const StudentState s_next = embed_student(fed.global_student, fed.embedder);
    for (std::size_t i = 0; i < row.selected_nodes.size(); ++i) {
        if (!locals[i].ok) continue;
        Node& node = fed.nodes[row.selected_nodes[i]];
        const double r =
            compute_reward(val_acc_before[i], row.node_val_accuracy[row.selected_nodes[i]]);
        if (i == 0) {
            row.action_a1 = locals[i].step.a1;
            row.action_a2 = locals[i].step.a2;
            row.batch_size = locals[i].step.batch_size;
            row.reward = r;
        }
        if (!fed.options.teacher_training) continue;
        Transition tr;
        tr.state = locals[i].step.state_before.v;
        tr.a1 = locals[i].step.a1;
        tr.a2 = locals[i].step.a2;
        tr.reward = r;
        tr.next_state = s_next.v;
        node.teacher.replay.push(std::move(tr));
        if (critic_update(node.teacher, fed.replay_rng)) {
            actor_update(node.teacher, fed.replay_rng);
            ++node.teacher.learner_steps;
            target_sync(node.teacher, node.teacher.learner_steps);
        }
    }

    ++fed.iteration;
    return row;
}

// FedAvg baseline round: every node trains a copy of the global model locally
// for local_epochs (uniform seeded minibatches; batch_size 0 means full
// batch), then the global model moves by eta/n times the summed deltas.
// Non-finite local models are dropped with n adjusted. The hook, when set,
// sees each node's local model after training and before aggregation.
inline std::string fedavg_round_with_hook(
    Federation& fed, std::size_t local_epochs, double eta, std::size_t batch_size,
    const std::function<void(std::size_t, Mlp&)>& post_local_hook) {
    std::string flag = "ok";
    const Mlp& g = fed.global_student;
    std::vector<Mlp> locals;
    locals.reserve(fed.nodes.size());
    std::vector<bool> ok(fed.nodes.size(), true);

    for (std::size_t n = 0; n < fed.nodes.size(); ++n) {
        Node& node = fed.nodes[n];
        Mlp local = g;
        OptimizerState opt =
            make_optimizer(local, fed.options.student_lr, fed.options.student_momentum);
        const Matrix& features = federation_detail::node_train_features(fed, node);
        const Matrix targets = one_hot(node.train.labels, fed.class_count);
        const std::size_t m = node.train.size();
        try {
            for (std::size_t epoch = 0; epoch < local_epochs; ++epoch) {
                if (batch_size == 0 || batch_size >= m) {
                    const auto acts = forward(local, features);
                    const auto loss = loss_eval(LossKind::CrossEntropy, acts.back(), targets);
                    const auto grads = backward(local, acts, loss.output_grad);
                    sgd_step(local, grads, opt);
                } else {
                    std::vector<std::size_t> order(m);
                    std::iota(order.begin(), order.end(), std::size_t{0});
                    for (std::size_t i = m; i > 1; --i)
                        std::swap(order[i - 1], order[fed.exploration_rng.uniform_index(i)]);
                    for (std::size_t start = 0; start < m; start += batch_size) {
                        const std::size_t b = std::min(batch_size, m - start);
                        std::vector<std::size_t> rows(order.begin() + start,
                                                      order.begin() + start + b);
                        const Matrix bx = federation_detail::gather_rows(features, rows);
                        std::vector<int> labels(b);
                        for (std::size_t i = 0; i < b; ++i) labels[i] = node.train.labels[rows[i]];
                        const Matrix bt = one_hot(labels, fed.class_count);
                        const auto acts = forward(local, bx);
                        const auto loss = loss_eval(LossKind::CrossEntropy, acts.back(), bt);
                        const auto grads = backward(local, acts, loss.output_grad);
                        sgd_step(local, grads, opt);
                    }
                }
            }
        } catch (const NumericError&) {
            ok[n] = false;
            flag = "node_failure:" + std::to_string(n);
        }
        if (ok[n] && post_local_hook) post_local_hook(n, local);
        if (ok[n])
            for (const auto& w : local.weights)
                if (!w.all_finite()) {
                    ok[n] = false;
                    flag = "node_failure:" + std::to_string(n);
                }
        locals.push_back(std::move(local));
    }

    std::size_t n_effective = 0;
    for (bool b : ok)
        if (b) ++n_effective;
    if (n_effective == 0) return "all_nodes_failed";

    if (n_effective == 1 && eta == 1.0 && fed.nodes.size() == 1) {
        // eta/n * (L - G) + G is exactly L here; assign directly so the
        // single-node round reproduces centralized training bit for bit.
        for (std::size_t n = 0; n < locals.size(); ++n)
            if (ok[n]) fed.global_student = std::move(locals[n]);
        return flag;
    }

    Mlp updated = fed.global_student;
    const double scale = eta / static_cast<double>(n_effective);
    for (std::size_t n = 0; n < locals.size(); ++n) {
        if (!ok[n]) continue;
        Mlp delta = locals[n];
        for_each_param_pair(delta, fed.global_student, [](double& dst, double src) { dst -= src; });
        for_each_param_pair(updated, delta, [&](double& dst, double src) { dst += scale * src; });
    }
    fed.global_student = std::move(updated);
    return flag;
}

inline std::string fedavg_round(Federation& fed, std::size_t local_epochs, double eta,
                                std::size_t batch_size) {
    return fedavg_round_with_hook(fed, local_epochs, eta, batch_size, nullptr);
}

// Replaces the node's training features with seeded uniform draws over each
// feature's observed range and the labels with uniform classes. The
// validation shard stays clean: degraded validation scores are the signal the
// scheduler uses to detect the attack. Re-poisoning is a warning no-op.
inline void poison_node_data(Federation& fed, std::size_t node_index, std::uint64_t seed) {
    Node& node = fed.nodes.at(node_index);
    if (node.poisoned == PoisonState::DataPoisoned) {
        std::cerr << "[flst] warning: node " << node_index << " already data-poisoned; skipping\n";
        return;
    }
    Rng rng(seed);
    const std::size_t d = node.train.features.cols;
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < node.train.features.rows; ++r) {
        const double* row = node.train.features.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            lo[c] = std::min(lo[c], row[c]);
            hi[c] = std::max(hi[c], row[c]);
        }
    }
    for (std::size_t r = 0; r < node.train.features.rows; ++r) {
        double* row = node.train.features.row(r);
        for (std::size_t c = 0; c < d; ++c) row[c] = rng.uniform(lo[c], hi[c]);
    }
    for (auto& label : node.train.labels)
        label = static_cast<int>(rng.uniform_index(fed.class_count));
    node.poisoned = PoisonState::DataPoisoned;
    federation_detail::refresh_node_data_views(fed, node);
}

// Overwrites one seeded-chosen weight matrix of the node's teacher actor with
// uniform(-1,1) values.
inline void poison_node_model(Federation& fed, std::size_t node_index, std::uint64_t seed) {
    Node& node = fed.nodes.at(node_index);
    Rng rng(seed);
    Mlp& actor = node.teacher.actor;
    const std::size_t which = rng.uniform_index(actor.weights.size());
    for (double& v : actor.weights[which].values) v = rng.uniform(-1.0, 1.0);
    node.poisoned = PoisonState::ModelPoisoned;
}

struct EvaluationResult {
    double accuracy = 0.0;
    std::optional<double> auc;
    double mean_loss = 0.0;
};

// Held-out evaluation. AUC is computed with the rank statistic (average ranks
// over ties) and only defined for binary tasks.
inline EvaluationResult evaluate_global(const Federation& fed, const Dataset& test_set,
                                        bool want_auc = false) {
    if (test_set.empty()) throw ConfigError("evaluate_global: empty test set");
    if (want_auc && fed.class_count != 2)
        throw ConfigError("evaluate_global: AUC requires a binary task");

    const Matrix features =
        fed.encoder ? encode_batch(*fed.encoder, test_set.features) : test_set.features;
    const auto acts = forward(fed.global_student, features);
    const Matrix& pred = acts.back();
    const Matrix targets = one_hot(test_set.labels, fed.class_count);

    EvaluationResult res;
    res.mean_loss = loss_eval(LossKind::CrossEntropy, pred, targets).loss;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < pred.rows; ++r) {
        const double* row = pred.row(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < pred.cols; ++c)
            if (row[c] > row[best]) best = c;
        if (static_cast<int>(best) == test_set.labels[r]) ++hits;
    }
    res.accuracy = static_cast<double>(hits) / static_cast<double>(pred.rows);

    if (want_auc) {
        std::vector<std::size_t> order(pred.rows);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return pred.at(a, 1) < pred.at(b, 1); });
        std::vector<double> ranks(pred.rows);
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() && pred.at(order[j + 1], 1) == pred.at(order[i], 1)) ++j;
            const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg_rank;
            i = j + 1;
        }
        double pos_rank_sum = 0.0;
        std::size_t positives = 0;
        for (std::size_t r = 0; r < pred.rows; ++r)
            if (test_set.labels[r] == 1) {
                pos_rank_sum += ranks[r];
                ++positives;
            }
        const std::size_t negatives = pred.rows - positives;
        if (positives == 0 || negatives == 0)
            throw ConfigError("evaluate_global: AUC needs both classes present");
        res.auc = (pos_rank_sum - static_cast<double>(positives) *
                                      (static_cast<double>(positives) + 1.0) / 2.0) /
                  (static_cast<double>(positives) * static_cast<double>(negatives));
    }
    return res;
}

struct FederationSeeds {
    std::uint64_t student_init = 1;
    std::uint64_t teacher_init = 2;
    std::uint64_t scheduler_init = 3;
    std::uint64_t scheduler_sampling = 4;
    std::uint64_t exploration = 5;
    std::uint64_t replay = 6;
    std::uint64_t encoder = 7;
    std::uint64_t poison = 8;
};

struct AgentArchitectures {
    std::vector<std::size_t> student_hidden{50, 50};
    TeacherConfig teacher;
    SchedulerConfig scheduler;
};

// Assembles a federation from partitioned data: per-node ranking models and
// curricula, per-node teachers, optionally a shared encoder fit on the pooled
// training features, the global student, and the scheduler. Verifies shard
// disjointness across the whole federation.
inline Federation make_federation(const FederationData& data, const AgentArchitectures& arch,
                                  const FederationOptions& options, const FederationSeeds& seeds,
                                  std::optional<Encoder> shared_encoder = std::nullopt) {
    Federation fed;
    fed.options = options;
    fed.class_count = data.class_count;
    fed.encoder = std::move(shared_encoder);
    fed.scheduler_rng = Rng(seeds.scheduler_sampling);
    fed.exploration_rng = Rng(seeds.exploration);
    fed.replay_rng = Rng(seeds.replay);
    fed.poison_rng = Rng(seeds.poison);

    std::unordered_set<std::uint64_t> all_ids;
    auto check_disjoint = [&](const Dataset& ds, const std::string& what) {
        validate_dataset(ds, what);
        for (std::uint64_t id : ds.instance_ids)
            if (!all_ids.insert(id).second)
                throw ValidationError(what + ": instance id " + std::to_string(id) +
                                      " appears in more than one shard");
    };

    const std::size_t input_dim = fed.encoder ? fed.encoder->latent_dim : data.feature_dim;
    std::vector<std::size_t> student_sizes{input_dim};
    student_sizes.insert(student_sizes.end(), arch.student_hidden.begin(),
                         arch.student_hidden.end());
    student_sizes.push_back(data.class_count);
    std::vector<Activation> student_acts(arch.student_hidden.size(), Activation::Relu);
    student_acts.push_back(Activation::Softmax);
    fed.global_student = mlp_init(student_sizes, student_acts, seeds.student_init);
    fed.student_opt = make_optimizer(fed.global_student, options.student_lr,
                                     options.student_momentum);
    fed.embedder = make_embedder(student_sizes);

    fed.scheduler = make_scheduler(fed.embedder.expected_dim, data.nodes.size(), arch.scheduler,
                                   seeds.scheduler_init);

    fed.nodes.resize(data.nodes.size());
    for (std::size_t n = 0; n < data.nodes.size(); ++n) {
        Node& node = fed.nodes[n];
        node.node_id = n;
        node.train = data.nodes[n].train;
        node.validation = data.nodes[n].validation;
        check_disjoint(node.train, "node " + std::to_string(n) + " train");
        check_disjoint(node.validation, "node " + std::to_string(n) + " validation");
        node.teacher = make_teacher(fed.embedder.expected_dim, arch.teacher,
                                    derive_seed(seeds.teacher_init, n));
        federation_detail::refresh_node_data_views(fed, node);
    }
    for (const auto& shards : data.nodes)
        check_disjoint(shards.test, "node test");
    return fed;
}

} // namespace flst
