#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "flst/checkpoint.hpp"
#include "flst/config.hpp"
#include "flst/datasets.hpp"
#include "flst/federation.hpp"
#include "flst/metrics.hpp"

namespace flst {

struct RunSummary {
    std::size_t iterations_run = 0;
    double final_test_accuracy = 0.0;
    std::optional<double> final_test_auc;
    double best_accuracy = 0.0;
    std::size_t best_iteration = 0;
    double mean_final_entropy = 0.0;
    std::vector<double> selection_frequencies;
    double wall_clock_seconds = 0.0;
};

// Deterministic aggregation of a metrics stream. Selection frequencies and
// mean entropy are computed over the final `window` rows.
inline RunSummary emit_summary(const std::vector<MetricsRow>& rows, std::size_t node_count,
                               std::size_t window) {
    RunSummary s;
    s.iterations_run = rows.size();
    s.selection_frequencies.assign(node_count, 0.0);
    if (rows.empty()) return s;

    bool best_set = false;
    for (const auto& row : rows) {
        if (row.test_accuracy) {
            s.final_test_accuracy = *row.test_accuracy;
            if (!best_set || *row.test_accuracy > s.best_accuracy) {
                s.best_accuracy = *row.test_accuracy;
                s.best_iteration = row.iteration;
                best_set = true;
            }
        }
    }

    const std::size_t w = std::min(window, rows.size());
    const std::size_t start = rows.size() - w;
    double entropy_sum = 0.0;
    std::size_t selections = 0;
    for (std::size_t i = start; i < rows.size(); ++i) {
        entropy_sum += entropy(rows[i].scheduler_probs);
        for (std::size_t node : rows[i].selected_nodes) {
            if (node < node_count) {
                s.selection_frequencies[node] += 1.0;
                ++selections;
            }
        }
    }
    s.mean_final_entropy = entropy_sum / static_cast<double>(w);
    if (selections > 0)
        for (double& f : s.selection_frequencies) f /= static_cast<double>(selections);
    return s;
}

inline json summary_to_json(const RunSummary& s) {
    json j;
    j["iterations_run"] = s.iterations_run;
    j["final_test_accuracy"] = s.final_test_accuracy;
    if (s.final_test_auc) j["final_test_auc"] = *s.final_test_auc;
    j["best_accuracy"] = s.best_accuracy;
    j["best_iteration"] = s.best_iteration;
    j["mean_final_entropy"] = s.mean_final_entropy;
    j["selection_frequencies"] = s.selection_frequencies;
    j["wall_clock_seconds"] = s.wall_clock_seconds;
    return j;
}

inline std::string summary_to_text(const RunSummary& s) {
    std::ostringstream out;
    out << "iterations run:        " << s.iterations_run << "\n";
    out << "final test accuracy:   " << s.final_test_accuracy << "\n";
    if (s.final_test_auc) out << "final test auc:        " << *s.final_test_auc << "\n";
    out << "best accuracy:         " << s.best_accuracy << " (iteration " << s.best_iteration
        << ")\n";
    out << "mean final entropy:    " << s.mean_final_entropy << "\n";
    out << "selection frequencies:";
    for (double f : s.selection_frequencies) out << ' ' << f;
    out << "\nwall clock seconds:    " << s.wall_clock_seconds << "\n";
    return out.str();
}

namespace experiment_detail {

inline RawCorpus build_corpus(const ExperimentConfig& cfg, std::uint64_t data_seed) {
    RawCorpus corpus;
    if (cfg.dataset.kind == "synthetic_tabular") {
        corpus = gen_synthetic_tabular(cfg.dataset.class_count, cfg.dataset.feature_dim,
                                       cfg.dataset.instances, cfg.dataset.node_shift,
                                       cfg.partition.node_count, data_seed);
    } else if (cfg.dataset.kind == "synthetic_digits") {
        corpus = gen_synthetic_digits(cfg.dataset.instances, data_seed);
    } else {
        corpus = load_mnist_idx(cfg.dataset.images_path, cfg.dataset.labels_path);
        if (cfg.dataset.subsample > 0)
            corpus = subsample_corpus(corpus, cfg.dataset.subsample, derive_seed(data_seed, 17));
    }
    if (cfg.dataset.label_noise_enabled)
        corpus = randomize_labels_in_score_band(corpus, cfg.dataset.label_noise_lo,
                                                cfg.dataset.label_noise_hi,
                                                derive_seed(data_seed, 23));
    return corpus;
}

inline PartitionPlan build_plan(const ExperimentConfig& cfg, std::size_t node_count,
                                std::uint64_t seed) {
    PartitionPlan plan;
    plan.node_count = node_count;
    if (cfg.partition.scheme == "random_uniform") plan.scheme = PartitionScheme::RandomUniform;
    else if (cfg.partition.scheme == "random_sized") plan.scheme = PartitionScheme::RandomSized;
    else if (cfg.partition.scheme == "label_skew") plan.scheme = PartitionScheme::LabelSkew;
    else plan.scheme = PartitionScheme::SourceBlocks;
    plan.dirichlet_alpha = cfg.partition.dirichlet_alpha;
    plan.train_fraction = cfg.partition.train_fraction;
    plan.val_fraction = cfg.partition.val_fraction;
    plan.test_fraction = cfg.partition.test_fraction;
    plan.seed = seed;
    return plan;
}

inline FederationOptions build_options(const ExperimentConfig& cfg) {
    FederationOptions opt;
    opt.selection_mode =
        cfg.training.selection == "top_k" ? SelectionMode::TopK : SelectionMode::OneHot;
    opt.top_k = cfg.training.top_k;
    opt.curriculum_batches = cfg.curriculum.batch_count;
    opt.w_max = cfg.curriculum.w_max;
    opt.metric = cfg.curriculum.metric == "cosine" ? Metric::Cosine : Metric::Mahalanobis;
    opt.rank_on_latent = cfg.curriculum.rank_on_latent;
    opt.teacher_training = cfg.teacher.mode == "joint";
    opt.explore = true;
    opt.student_lr = cfg.training.learning_rate;
    opt.student_momentum = cfg.training.momentum;
    opt.eval_every = cfg.training.eval_every;
    return opt;
}

inline AgentArchitectures build_arch(const ExperimentConfig& cfg) {
    AgentArchitectures arch;
    arch.student_hidden = cfg.student_hidden;
    arch.teacher.actor_hidden = cfg.teacher.hidden;
    arch.teacher.critic_hidden = cfg.teacher.hidden;
    arch.teacher.gamma = cfg.teacher.gamma;
    arch.teacher.target_refresh_k = cfg.teacher.target_refresh_k;
    arch.teacher.replay_capacity = cfg.teacher.replay_capacity;
    arch.teacher.minibatch_size = cfg.teacher.minibatch_size;
    arch.teacher.exploration_noise_std = cfg.teacher.exploration_noise_std;
    arch.teacher.actor_lr = cfg.teacher.learning_rate;
    arch.teacher.critic_lr = cfg.teacher.critic_learning_rate;
    arch.teacher.momentum = cfg.teacher.momentum;
    arch.scheduler.hidden = cfg.scheduler.hidden;
    arch.scheduler.epsilon = cfg.scheduler.epsilon;
    arch.scheduler.entropy_weight = cfg.scheduler.entropy_weight;
    arch.scheduler.learning_rate = cfg.scheduler.learning_rate;
    arch.scheduler.momentum = cfg.scheduler.momentum;
    return arch;
}

inline FederationSeeds build_seeds(const SeedsSpec& s, std::uint64_t stream = 0) {
    FederationSeeds fs;
    fs.student_init = derive_seed(s.student_init, stream);
    fs.teacher_init = derive_seed(s.teacher_init, stream);
    fs.scheduler_init = derive_seed(s.scheduler_init, stream);
    fs.scheduler_sampling = derive_seed(s.scheduler_sampling, stream);
    fs.exploration = derive_seed(s.exploration, stream);
    fs.replay = derive_seed(s.replay, stream);
    fs.encoder = derive_seed(s.encoder, stream);
    fs.poison = derive_seed(s.poison, stream);
    return fs;
}

inline Dataset pooled_train(const FederationData& fd) {
    std::size_t total = 0;
    for (const auto& node : fd.nodes) total += node.train.size();
    Dataset pool;
    pool.features = Matrix(total, fd.feature_dim);
    pool.labels.reserve(total);
    pool.instance_ids.reserve(total);
    std::size_t r = 0;
    for (const auto& node : fd.nodes) {
        for (std::size_t i = 0; i < node.train.size(); ++i, ++r) {
            const double* src = node.train.features.row(i);
            double* dst = pool.features.row(r);
            for (std::size_t c = 0; c < fd.feature_dim; ++c) dst[c] = src[c];
            pool.labels.push_back(node.train.labels[i]);
            pool.instance_ids.push_back(node.train.instance_ids[i]);
        }
    }
    return pool;
}

inline std::optional<Encoder> maybe_fit_encoder(const ExperimentConfig& cfg,
                                                const FederationData& fd, std::uint64_t seed) {
    if (!cfg.encoder.enabled) return std::nullopt;
    const Dataset pool = pooled_train(fd);
    return fit_encoder(pool, cfg.encoder.latent_dim, cfg.encoder.noise_level, cfg.encoder.epochs,
                       seed, cfg.encoder.learning_rate, cfg.encoder.batch_size);
}

inline void poison_validation_shard(Federation& fed, std::size_t node_index, std::uint64_t seed) {
    Node& node = fed.nodes.at(node_index);
    Rng rng(seed);
    const std::size_t d = node.validation.features.cols;
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < node.validation.features.rows; ++r) {
        const double* row = node.validation.features.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            lo[c] = std::min(lo[c], row[c]);
            hi[c] = std::max(hi[c], row[c]);
        }
    }
    for (std::size_t r = 0; r < node.validation.features.rows; ++r) {
        double* row = node.validation.features.row(r);
        for (std::size_t c = 0; c < d; ++c) row[c] = rng.uniform(lo[c], hi[c]);
    }
    for (auto& label : node.validation.labels)
        label = static_cast<int>(rng.uniform_index(fed.class_count));
    if (fed.encoder)
        node.encoded_validation = encode_batch(*fed.encoder, node.validation.features);
}

// Trains a fresh teacher in a single-node student-teacher loop over the given
// shards and returns it.
inline Teacher pretrain_teacher(const ExperimentConfig& cfg, const NodeShards& shards,
                                std::size_t class_count, std::size_t feature_dim,
                                std::size_t iterations, std::uint64_t seed_stream) {
    FederationData fd;
    fd.class_count = class_count;
    fd.feature_dim = feature_dim;
    fd.nodes.push_back(shards);
    fd.global_test = shards.test;

    FederationOptions options = build_options(cfg);
    options.teacher_training = true;
    options.selection_mode = SelectionMode::OneHot;
    const AgentArchitectures arch = build_arch(cfg);
    const FederationSeeds seeds = build_seeds(cfg.seeds, seed_stream);
    auto encoder = maybe_fit_encoder(cfg, fd, seeds.encoder);
    Federation fed = make_federation(fd, arch, options, seeds, std::move(encoder));
    for (std::size_t i = 0; i < iterations; ++i) run_outer_iteration(fed);
    return std::move(fed.nodes[0].teacher);
}

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace experiment_detail

// Runs one experiment to its configured budget, writing metrics.csv,
// manifest.json, summary.json/summary.txt and final checkpoints into
// cfg.output_dir.
inline RunSummary run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    using namespace experiment_detail;
    const auto t_start = std::chrono::steady_clock::now();

    fs::create_directories(cfg.output_dir);
    const std::string manifest_path = cfg.output_dir + "/manifest.json";
    {
        std::ofstream manifest(manifest_path, std::ios::trunc);
        manifest << config_to_json(cfg).dump(2) << "\n";
    }

    const bool is_flst_like =
        cfg.scenario == Scenario::Flst || cfg.scenario == Scenario::FlstDataPoison ||
        cfg.scenario == Scenario::FlstModelPoison || cfg.scenario == Scenario::TeacherSelect;
    const bool is_fedavg_like =
        cfg.scenario == Scenario::FedAvg || cfg.scenario == Scenario::FedAvgDataPoison ||
        cfg.scenario == Scenario::FedAvgModelPoison;
    const bool want_auc = cfg.dataset.class_count == 2;

    // Data.
    const RawCorpus corpus = build_corpus(cfg, cfg.seeds.data);
    const FederationData fd =
        partition_and_split(corpus, build_plan(cfg, cfg.partition.node_count,
                                               derive_seed(cfg.seeds.data, 5)));

    // Federation (the baselines reuse it for per-node validation metrics).
    FederationOptions options = build_options(cfg);
    const AgentArchitectures arch = build_arch(cfg);
    const FederationSeeds seeds = build_seeds(cfg.seeds);
    auto encoder = maybe_fit_encoder(cfg, fd, seeds.encoder);
    Federation fed = make_federation(fd, arch, options, seeds, std::move(encoder));

    // Teacher pretraining (per node, on its own shard) when requested.
    if (is_flst_like && cfg.teacher.mode == "pretrained" &&
        cfg.scenario != Scenario::TeacherSelect) {
        for (std::size_t n = 0; n < fed.nodes.size(); ++n)
            fed.nodes[n].teacher =
                pretrain_teacher(cfg, fd.nodes[n], fd.class_count, fd.feature_dim,
                                 cfg.teacher.pretrain_iterations, 1000 + n);
        fed.options.teacher_training = false;
        fed.options.explore = false;
    }

    // Teacher-selection scenario: one teacher per node, each pretrained on its
    // own synthetic task (distinct label-noise bands along the curriculum);
    // the federation itself holds task 0's data.
    if (cfg.scenario == Scenario::TeacherSelect) {
        for (std::size_t t = 0; t < cfg.teacher_select.task_noise_bands.size(); ++t) {
            ExperimentConfig task_cfg = cfg;
            task_cfg.dataset.label_noise_enabled = true;
            task_cfg.dataset.label_noise_lo = cfg.teacher_select.task_noise_bands[t].first;
            task_cfg.dataset.label_noise_hi = cfg.teacher_select.task_noise_bands[t].second;
            const RawCorpus task_corpus =
                build_corpus(task_cfg, derive_seed(cfg.seeds.data, 300 + t));
            const FederationData task_fd = partition_and_split(
                task_corpus,
                build_plan(cfg, 1, derive_seed(cfg.seeds.data, 400 + t)));
            fed.nodes[t].teacher =
                pretrain_teacher(task_cfg, task_fd.nodes[0], task_fd.class_count,
                                 task_fd.feature_dim, cfg.teacher_select.pretrain_iterations,
                                 2000 + t);
        }
        fed.options.teacher_training = false;
        fed.options.explore = false;
    }

    // Poisoning setup.
    if (cfg.scenario == Scenario::FlstDataPoison || cfg.scenario == Scenario::FedAvgDataPoison) {
        for (std::size_t n : cfg.poison.data_nodes) {
            poison_node_data(fed, n, derive_seed(cfg.seeds.poison, n));
            if (cfg.poison.poison_validation)
                poison_validation_shard(fed, n, derive_seed(cfg.seeds.poison, 500 + n));
        }
    }
    if (cfg.scenario == Scenario::FlstModelPoison) {
        for (std::size_t n : cfg.poison.model_nodes)
            poison_node_model(fed, n, derive_seed(cfg.seeds.poison, n));
    }

    if (cfg.dump_curricula) {
        for (std::size_t n = 0; n < fed.nodes.size(); ++n) {
            std::ofstream dump(cfg.output_dir + "/curriculum_node_" + std::to_string(n) + ".txt",
                               std::ios::trunc);
            dump << curriculum_table(fed.nodes[n].train, fed.nodes[n].curriculum);
        }
    }

    MetricsWriter writer(cfg.output_dir + "/metrics.csv", fed.nodes.size());
    std::vector<MetricsRow> rows;
    rows.reserve(cfg.training.iterations);

    auto evaluate_now = [&](MetricsRow& row) {
        const auto eval = evaluate_global(fed, fd.global_test, want_auc);
        row.test_accuracy = eval.accuracy;
        return eval;
    };

    std::optional<double> final_auc;
    std::string failure;
    try {
        if (is_flst_like) {
            for (std::size_t i = 0; i < cfg.training.iterations; ++i) {
                MetricsRow row = run_outer_iteration(fed);
                if (i % cfg.training.eval_every == 0 || i + 1 == cfg.training.iterations) {
                    const auto eval = evaluate_now(row);
                    if (i + 1 == cfg.training.iterations && eval.auc) final_auc = eval.auc;
                }
                writer.write(row);
                rows.push_back(std::move(row));
            }
        } else if (is_fedavg_like) {
            for (std::size_t round = 0; round < cfg.training.iterations; ++round) {
                // Repeated local-model attack: randomize one weight matrix of
                // the listed nodes' local updates before aggregation.
                std::string flag = "ok";
                if (cfg.scenario == Scenario::FedAvgModelPoison) {
                    flag = fedavg_round_with_hook(
                        fed, cfg.fedavg.local_epochs, cfg.fedavg.eta, cfg.fedavg.batch_size,
                        [&](std::size_t node, Mlp& local) {
                            for (std::size_t p : cfg.poison.model_nodes) {
                                if (p != node) continue;
                                Rng prng(derive_seed(cfg.seeds.poison, round * 131 + node));
                                const std::size_t which = prng.uniform_index(local.weights.size());
                                for (double& v : local.weights[which].values)
                                    v = prng.uniform(-1.0, 1.0);
                            }
                        });
                } else {
                    flag = fedavg_round(fed, cfg.fedavg.local_epochs, cfg.fedavg.eta,
                                        cfg.fedavg.batch_size);
                }
                MetricsRow row;
                row.iteration = round;
                row.flag = flag;
                row.scheduler_probs.assign(fed.nodes.size(),
                                           1.0 / static_cast<double>(fed.nodes.size()));
                row.node_val_accuracy.resize(fed.nodes.size());
                double meta = 0.0;
                for (std::size_t n = 0; n < fed.nodes.size(); ++n) {
                    const auto vm = node_validation_metrics(fed, fed.nodes[n], fed.global_student);
                    row.node_val_accuracy[n] = vm.accuracy;
                    meta += vm.mean_loss;
                }
                row.meta_loss = meta;
                if (round % cfg.training.eval_every == 0 || round + 1 == cfg.training.iterations) {
                    const auto eval = evaluate_now(row);
                    if (round + 1 == cfg.training.iterations && eval.auc) final_auc = eval.auc;
                }
                writer.write(row);
                rows.push_back(std::move(row));
            }
        } else {
            // Centralized baselines: stochastic minibatch training (uniform
            // seeded batches) or a cyclic easy-to-hard curriculum sweep.
            const Dataset pool = pooled_train(fd);
            const Matrix pool_features =
                fed.encoder ? encode_batch(*fed.encoder, pool.features) : pool.features;
            Curriculum pool_curriculum;
            if (cfg.scenario == Scenario::Curric) {
                const RankingModel pool_ranking = fit_ranking(pool, fed.options.metric);
                pool_curriculum = build_curriculum(
                    pool, pool_ranking, std::min(cfg.curriculum.batch_count, pool.size()));
            }
            for (std::size_t i = 0; i < cfg.training.iterations; ++i) {
                std::vector<std::size_t> batch_rows;
                if (cfg.scenario == Scenario::Smbt) {
                    batch_rows.resize(std::min(cfg.training.batch_size, pool.size()));
                    for (auto& r : batch_rows)
                        r = fed.exploration_rng.uniform_index(pool.size());
                } else {
                    const std::size_t b = i % pool_curriculum.batch_count;
                    batch_rows.assign(pool_curriculum.ordered_indices.begin() +
                                          static_cast<std::ptrdiff_t>(
                                              pool_curriculum.batch_boundaries[b]),
                                      pool_curriculum.ordered_indices.begin() +
                                          static_cast<std::ptrdiff_t>(
                                              pool_curriculum.batch_boundaries[b + 1]));
                }
                const Matrix bx = federation_detail::gather_rows(pool_features, batch_rows);
                std::vector<int> labels(batch_rows.size());
                for (std::size_t r = 0; r < batch_rows.size(); ++r)
                    labels[r] = pool.labels[batch_rows[r]];
                const Matrix bt = one_hot(labels, fed.class_count);
                const auto acts = forward(fed.global_student, bx);
                const auto loss = loss_eval(LossKind::CrossEntropy, acts.back(), bt);
                const auto grads = backward(fed.global_student, acts, loss.output_grad);
                sgd_step(fed.global_student, grads, fed.student_opt);

                MetricsRow row;
                row.iteration = i;
                row.batch_size = batch_rows.size();
                row.inner_loss = loss.loss;
                row.scheduler_probs.assign(fed.nodes.size(),
                                           1.0 / static_cast<double>(fed.nodes.size()));
                row.node_val_accuracy.resize(fed.nodes.size());
                double meta = 0.0;
                for (std::size_t n = 0; n < fed.nodes.size(); ++n) {
                    const auto vm = node_validation_metrics(fed, fed.nodes[n], fed.global_student);
                    row.node_val_accuracy[n] = vm.accuracy;
                    meta += vm.mean_loss;
                }
                row.meta_loss = meta;
                if (i % cfg.training.eval_every == 0 || i + 1 == cfg.training.iterations) {
                    const auto eval = evaluate_now(row);
                    if (i + 1 == cfg.training.iterations && eval.auc) final_auc = eval.auc;
                }
                writer.write(row);
                rows.push_back(std::move(row));
            }
        }
    } catch (const NumericError& e) {
        failure = e.what();
    }
    writer.flush();

    RunSummary summary = emit_summary(rows, fed.nodes.size(), cfg.training.final_window);
    if (cfg.training.iterations == 0) {
        const auto eval = evaluate_global(fed, fd.global_test, want_auc);
        summary.final_test_accuracy = eval.accuracy;
        summary.best_accuracy = eval.accuracy;
        if (eval.auc) final_auc = eval.auc;
    }
    summary.final_test_auc = final_auc;
    summary.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    // Final checkpoints.
    write_file(cfg.output_dir + "/student.ckpt", serialize_mlp(fed.global_student));
    if (is_flst_like) {
        json meta;
        meta["epsilon"] = fed.scheduler.epsilon;
        meta["entropy_weight"] = fed.scheduler.entropy_weight;
        meta["baseline"] = fed.scheduler.baseline;
        meta["reference_vectors"] = fed.embedder.reference_vectors;
        AgentBundle sched_bundle;
        sched_bundle.nets.emplace_back("scheduler", fed.scheduler.net);
        sched_bundle.metadata = meta.dump();
        write_file(cfg.output_dir + "/scheduler.agent", serialize_agent(sched_bundle));
        for (std::size_t n = 0; n < fed.nodes.size(); ++n) {
            const Teacher& t = fed.nodes[n].teacher;
            json tmeta;
            tmeta["gamma"] = t.gamma;
            tmeta["target_refresh_k"] = t.target_refresh_k;
            tmeta["exploration_noise_std"] = t.exploration_noise_std;
            tmeta["reference_vectors"] = fed.embedder.reference_vectors;
            AgentBundle bundle;
            bundle.nets.emplace_back("actor", t.actor);
            bundle.nets.emplace_back("critic", t.critic);
            bundle.nets.emplace_back("target_actor", t.target_actor);
            bundle.nets.emplace_back("target_critic", t.target_critic);
            bundle.metadata = tmeta.dump();
            write_file(cfg.output_dir + "/teacher_node_" + std::to_string(n) + ".agent",
                       serialize_agent(bundle));
        }
    }

    {
        std::ofstream sj(cfg.output_dir + "/summary.json", std::ios::trunc);
        sj << summary_to_json(summary).dump(2) << "\n";
        std::ofstream st(cfg.output_dir + "/summary.txt", std::ios::trunc);
        st << summary_to_text(summary);
    }

    if (!failure.empty()) {
        json manifest_json = config_to_json(cfg);
        manifest_json["failure"] = failure;
        std::ofstream manifest(manifest_path, std::ios::trunc);
        manifest << manifest_json.dump(2) << "\n";
        throw NumericError("run failed mid-experiment: " + failure);
    }
    return summary;
}

} // namespace flst
