#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flst/datasets.hpp"
#include "flst/errors.hpp"
#include "flst/federation.hpp"
#include "flst/scheduler.hpp"
#include "flst/teacher.hpp"

namespace flst {

using json = nlohmann::json;

enum class Scenario {
    Flst,
    FedAvg,
    Smbt,
    Curric,
    FlstDataPoison,
    FlstModelPoison,
    FedAvgDataPoison,
    FedAvgModelPoison,
    TeacherSelect,
};

inline const std::vector<std::pair<std::string, Scenario>>& scenario_names() {
    static const std::vector<std::pair<std::string, Scenario>> names = {
        {"flst", Scenario::Flst},
        {"fedavg", Scenario::FedAvg},
        {"smbt", Scenario::Smbt},
        {"curric", Scenario::Curric},
        {"flst_data_poison", Scenario::FlstDataPoison},
        {"flst_model_poison", Scenario::FlstModelPoison},
        {"fedavg_data_poison", Scenario::FedAvgDataPoison},
        {"fedavg_model_poison", Scenario::FedAvgModelPoison},
        {"teacher_select", Scenario::TeacherSelect},
    };
    return names;
}

inline Scenario scenario_from_name(const std::string& name) {
    for (const auto& [n, s] : scenario_names())
        if (n == name) return s;
    throw ValidationError("unknown scenario '" + name + "'");
}

inline std::string scenario_name(Scenario s) {
    for (const auto& [n, v] : scenario_names())
        if (v == s) return n;
    return "?";
}

struct DatasetSpec {
    std::string kind = "synthetic_tabular"; // synthetic_tabular | synthetic_digits | mnist_idx
    // synthetic_tabular
    std::size_t class_count = 7;
    std::size_t feature_dim = 12;
    std::size_t instances = 7000;
    double node_shift = 0.0;
    // mnist_idx
    std::string images_path;
    std::string labels_path;
    std::size_t subsample = 0; // 0 = use everything
    // optional curriculum-band label noise (synthetic kinds only)
    bool label_noise_enabled = false;
    double label_noise_lo = 0.0;
    double label_noise_hi = 0.0;
};

struct EncoderSpec {
    bool enabled = false;
    std::size_t latent_dim = 8;
    double noise_level = 0.1;
    std::size_t epochs = 20;
    double learning_rate = 0.02;
    std::size_t batch_size = 32;
};

struct TeacherSpec {
    std::vector<std::size_t> hidden{150, 150};
    double gamma = 0.95;
    std::size_t target_refresh_k = 100;
    std::size_t replay_capacity = 10000;
    std::size_t minibatch_size = 64;
    double exploration_noise_std = 0.1;
    double learning_rate = 1e-3;
    double critic_learning_rate = 1e-3;
    double momentum = 0.0;
    std::string mode = "joint"; // joint | pretrained
    std::size_t pretrain_iterations = 500;
};

struct SchedulerSpec {
    std::vector<std::size_t> hidden{100, 100};
    double epsilon = 1e-5;
    double entropy_weight = 0.01;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::size_t output_size = 0; // 0 = node_count; anything else must match it
};

struct CurriculumSpec {
    std::size_t batch_count = 10;
    std::size_t w_max = 0; // 0 = batch_count - 1
    std::string metric = "mahalanobis"; // mahalanobis | cosine
    bool rank_on_latent = false;
};

struct TrainingSpec {
    std::size_t iterations = 1000;
    std::size_t eval_every = 100;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::string selection = "one_hot"; // one_hot | top_k
    std::size_t top_k = 1;
    std::size_t batch_size = 64; // smbt minibatch size
    std::size_t final_window = 200;
};

struct FedAvgSpec {
    double eta = 1.0;
    std::size_t local_epochs = 1;
    std::size_t batch_size = 64; // 0 = full batch
};

struct PoisonSpec {
    std::vector<std::size_t> data_nodes;
    std::vector<std::size_t> model_nodes;
    bool poison_validation = false; // ablation switch; default keeps validation clean
};

struct TeacherSelectSpec {
    std::size_t pretrain_iterations = 800;
    // One label-noise band per task; task 0 is the task the student trains on.
    std::vector<std::pair<double, double>> task_noise_bands;
};

struct SeedsSpec {
    std::uint64_t data = 1;
    std::uint64_t student_init = 2;
    std::uint64_t teacher_init = 3;
    std::uint64_t scheduler_init = 4;
    std::uint64_t scheduler_sampling = 5;
    std::uint64_t exploration = 6;
    std::uint64_t replay = 7;
    std::uint64_t encoder = 8;
    std::uint64_t poison = 9;
};

struct PartitionSpec {
    std::size_t node_count = 4;
    std::string scheme = "random_uniform";
    double dirichlet_alpha = 1.0;
    double train_fraction = 0.60;
    double val_fraction = 0.20;
    double test_fraction = 0.20;
};

struct ExperimentConfig {
    Scenario scenario = Scenario::Flst;
    DatasetSpec dataset;
    PartitionSpec partition;
    std::vector<std::size_t> student_hidden{50, 50};
    TeacherSpec teacher;
    SchedulerSpec scheduler;
    EncoderSpec encoder;
    CurriculumSpec curriculum;
    TrainingSpec training;
    FedAvgSpec fedavg;
    PoisonSpec poison;
    TeacherSelectSpec teacher_select;
    SeedsSpec seeds;
    std::string output_dir = "flst_run";
    bool dump_curricula = false;
};

// ---------------------------------------------------------------------------
// Strict-schema parsing helpers.

namespace config_detail {

inline std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// Wraps one JSON object, tracks which keys the schema consumed, and reports
// unknown keys with a nearest-match suggestion.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            throw ValidationError(path_ + ": expected an object");
    }

    bool has(const std::string& key) {
        known_.push_back(key);
        return j_.contains(key);
    }

    const json& at(const std::string& key) { return j_.at(key); }

    template <typename T>
    T get(const std::string& key, T fallback) {
        known_.push_back(key);
        if (!j_.contains(key)) return fallback;
        return convert<T>(key);
    }

    template <typename T>
    T require(const std::string& key) {
        known_.push_back(key);
        if (!j_.contains(key))
            throw ValidationError(path_ + ": missing required key '" + key + "'");
        return convert<T>(key);
    }

    // Verifies every present key was consumed by the schema.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            const std::string& key = it.key();
            if (std::find(known_.begin(), known_.end(), key) != known_.end()) continue;
            std::string best;
            std::size_t best_dist = 5;
            for (const auto& candidate : known_) {
                const std::size_t d = levenshtein(key, candidate);
                if (d < best_dist) {
                    best_dist = d;
                    best = candidate;
                }
            }
            std::string msg = path_ + ": unknown key '" + key + "'";
            if (!best.empty()) msg += " (did you mean '" + best + "'?)";
            throw ValidationError(msg);
        }
    }

    const std::string& path() const { return path_; }

private:
    template <typename T>
    T convert(const std::string& key) {
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ValidationError(path_ + "." + key + ": has the wrong type");
        }
    }

    const json& j_;
    std::string path_;
    std::vector<std::string> known_;
};

inline void require_positive(std::size_t v, const std::string& what) {
    if (v == 0) throw ValidationError(what + " must be positive");
}

} // namespace config_detail

inline ExperimentConfig parse_config_json(const json& root) {
    using config_detail::ObjectReader;
    ExperimentConfig cfg;
    ObjectReader top(root, "config");

    cfg.scenario = scenario_from_name(top.require<std::string>("scenario"));

    {
        ObjectReader ds(top.has("dataset") ? top.at("dataset") : json::object(), "dataset");
        cfg.dataset.kind = ds.get<std::string>("kind", cfg.dataset.kind);
        if (cfg.dataset.kind == "synthetic_tabular") {
            cfg.dataset.class_count = ds.get<std::size_t>("class_count", cfg.dataset.class_count);
            cfg.dataset.feature_dim = ds.get<std::size_t>("feature_dim", cfg.dataset.feature_dim);
            cfg.dataset.instances = ds.get<std::size_t>("instances", cfg.dataset.instances);
            cfg.dataset.node_shift = ds.get<double>("node_shift", cfg.dataset.node_shift);
        } else if (cfg.dataset.kind == "synthetic_digits") {
            cfg.dataset.class_count = 10;
            cfg.dataset.instances = ds.get<std::size_t>("instances", 12000);
        } else if (cfg.dataset.kind == "mnist_idx") {
            cfg.dataset.class_count = 10;
            cfg.dataset.images_path = ds.require<std::string>("images");
            cfg.dataset.labels_path = ds.require<std::string>("labels");
            cfg.dataset.subsample = ds.get<std::size_t>("subsample", 0);
        } else {
            throw ValidationError("dataset.kind: unknown kind '" + cfg.dataset.kind + "'");
        }
        if (ds.has("label_noise")) {
            if (cfg.dataset.kind == "mnist_idx")
                throw ValidationError("dataset.label_noise: not supported for mnist_idx");
            ObjectReader noise(ds.at("label_noise"), "dataset.label_noise");
            cfg.dataset.label_noise_enabled = true;
            cfg.dataset.label_noise_lo = noise.require<double>("lo");
            cfg.dataset.label_noise_hi = noise.require<double>("hi");
            noise.finish();
            if (!(0.0 <= cfg.dataset.label_noise_lo &&
                  cfg.dataset.label_noise_lo <= cfg.dataset.label_noise_hi &&
                  cfg.dataset.label_noise_hi <= 1.0))
                throw ValidationError("dataset.label_noise: need 0 <= lo <= hi <= 1");
        }
        ds.finish();
    }

    {
        ObjectReader pt(top.has("partition") ? top.at("partition") : json::object(), "partition");
        cfg.partition.node_count = pt.get<std::size_t>("node_count", cfg.partition.node_count);
        cfg.partition.scheme = pt.get<std::string>("scheme", cfg.partition.scheme);
        cfg.partition.dirichlet_alpha = pt.get<double>("dirichlet_alpha", 1.0);
        cfg.partition.train_fraction = pt.get<double>("train_fraction", 0.60);
        cfg.partition.val_fraction = pt.get<double>("val_fraction", 0.20);
        cfg.partition.test_fraction = pt.get<double>("test_fraction", 0.20);
        pt.finish();
        config_detail::require_positive(cfg.partition.node_count, "partition.node_count");
        if (cfg.partition.scheme != "random_uniform" && cfg.partition.scheme != "random_sized" &&
            cfg.partition.scheme != "label_skew" && cfg.partition.scheme != "source_blocks")
            throw ValidationError("partition.scheme: unknown scheme '" + cfg.partition.scheme + "'");
    }

    {
        ObjectReader st(top.has("student") ? top.at("student") : json::object(), "student");
        cfg.student_hidden = st.get<std::vector<std::size_t>>("hidden", cfg.student_hidden);
        st.finish();
        if (cfg.student_hidden.empty())
            throw ValidationError("student.hidden: needs at least one hidden layer");
        for (std::size_t h : cfg.student_hidden)
            config_detail::require_positive(h, "student.hidden entries");
    }

    {
        ObjectReader te(top.has("teacher") ? top.at("teacher") : json::object(), "teacher");
        cfg.teacher.hidden = te.get<std::vector<std::size_t>>("hidden", cfg.teacher.hidden);
        cfg.teacher.gamma = te.get<double>("gamma", cfg.teacher.gamma);
        cfg.teacher.target_refresh_k =
            te.get<std::size_t>("target_refresh_k", cfg.teacher.target_refresh_k);
        cfg.teacher.replay_capacity =
            te.get<std::size_t>("replay_capacity", cfg.teacher.replay_capacity);
        cfg.teacher.minibatch_size = te.get<std::size_t>("minibatch_size", cfg.teacher.minibatch_size);
        cfg.teacher.exploration_noise_std =
            te.get<double>("exploration_noise_std", cfg.teacher.exploration_noise_std);
        cfg.teacher.learning_rate = te.get<double>("learning_rate", cfg.teacher.learning_rate);
        cfg.teacher.critic_learning_rate =
            te.get<double>("critic_learning_rate", cfg.teacher.critic_learning_rate);
        cfg.teacher.momentum = te.get<double>("momentum", cfg.teacher.momentum);
        cfg.teacher.mode = te.get<std::string>("mode", cfg.teacher.mode);
        cfg.teacher.pretrain_iterations =
            te.get<std::size_t>("pretrain_iterations", cfg.teacher.pretrain_iterations);
        te.finish();
        if (cfg.teacher.mode != "joint" && cfg.teacher.mode != "pretrained")
            throw ValidationError("teacher.mode: must be 'joint' or 'pretrained'");
        if (cfg.teacher.gamma < 0.0 || cfg.teacher.gamma >= 1.0)
            throw ValidationError("teacher.gamma: must lie in [0,1)");
        config_detail::require_positive(cfg.teacher.target_refresh_k, "teacher.target_refresh_k");
        config_detail::require_positive(cfg.teacher.minibatch_size, "teacher.minibatch_size");
    }

    {
        ObjectReader sc(top.has("scheduler") ? top.at("scheduler") : json::object(), "scheduler");
        cfg.scheduler.hidden = sc.get<std::vector<std::size_t>>("hidden", cfg.scheduler.hidden);
        cfg.scheduler.epsilon = sc.get<double>("epsilon", cfg.scheduler.epsilon);
        cfg.scheduler.entropy_weight = sc.get<double>("entropy_weight", cfg.scheduler.entropy_weight);
        cfg.scheduler.learning_rate = sc.get<double>("learning_rate", cfg.scheduler.learning_rate);
        cfg.scheduler.momentum = sc.get<double>("momentum", cfg.scheduler.momentum);
        cfg.scheduler.output_size = sc.get<std::size_t>("output_size", 0);
        sc.finish();
        if (cfg.scheduler.epsilon <= 0.0)
            throw ValidationError("scheduler.epsilon: must be positive");
        if (cfg.scheduler.entropy_weight < 0.0)
            throw ValidationError("scheduler.entropy_weight: must be >= 0");
        if (cfg.scheduler.output_size != 0 &&
            cfg.scheduler.output_size != cfg.partition.node_count)
            throw ValidationError("scheduler.output_size: must equal partition.node_count (" +
                                  std::to_string(cfg.partition.node_count) + "), got " +
                                  std::to_string(cfg.scheduler.output_size));
    }

    {
        ObjectReader en(top.has("encoder") ? top.at("encoder") : json::object(), "encoder");
        cfg.encoder.enabled = en.get<bool>("enabled", false);
        cfg.encoder.latent_dim = en.get<std::size_t>("latent_dim", cfg.encoder.latent_dim);
        cfg.encoder.noise_level = en.get<double>("noise_level", cfg.encoder.noise_level);
        cfg.encoder.epochs = en.get<std::size_t>("epochs", cfg.encoder.epochs);
        cfg.encoder.learning_rate = en.get<double>("learning_rate", cfg.encoder.learning_rate);
        cfg.encoder.batch_size = en.get<std::size_t>("batch_size", cfg.encoder.batch_size);
        en.finish();
    }

    {
        ObjectReader cu(top.has("curriculum") ? top.at("curriculum") : json::object(), "curriculum");
        cfg.curriculum.batch_count = cu.get<std::size_t>("batch_count", cfg.curriculum.batch_count);
        cfg.curriculum.w_max = cu.get<std::size_t>("w_max", 0);
        cfg.curriculum.metric = cu.get<std::string>("metric", cfg.curriculum.metric);
        cfg.curriculum.rank_on_latent = cu.get<bool>("rank_on_latent", false);
        cu.finish();
        config_detail::require_positive(cfg.curriculum.batch_count, "curriculum.batch_count");
        if (cfg.curriculum.metric != "mahalanobis" && cfg.curriculum.metric != "cosine")
            throw ValidationError("curriculum.metric: must be 'mahalanobis' or 'cosine'");
    }

    {
        ObjectReader tr(top.has("training") ? top.at("training") : json::object(), "training");
        cfg.training.iterations = tr.get<std::size_t>("iterations", cfg.training.iterations);
        cfg.training.eval_every = tr.get<std::size_t>("eval_every", cfg.training.eval_every);
        cfg.training.learning_rate = tr.get<double>("learning_rate", cfg.training.learning_rate);
        cfg.training.momentum = tr.get<double>("momentum", cfg.training.momentum);
        cfg.training.selection = tr.get<std::string>("selection", cfg.training.selection);
        cfg.training.top_k = tr.get<std::size_t>("top_k", cfg.training.top_k);
        cfg.training.batch_size = tr.get<std::size_t>("batch_size", cfg.training.batch_size);
        cfg.training.final_window = tr.get<std::size_t>("final_window", cfg.training.final_window);
        tr.finish();
        if (cfg.training.selection != "one_hot" && cfg.training.selection != "top_k")
            throw ValidationError("training.selection: must be 'one_hot' or 'top_k'");
        if (cfg.training.selection == "top_k") {
            config_detail::require_positive(cfg.training.top_k, "training.top_k");
            if (cfg.training.top_k > cfg.partition.node_count)
                throw ValidationError("training.top_k: exceeds partition.node_count");
        }
        if (cfg.training.learning_rate <= 0.0)
            throw ValidationError("training.learning_rate: must be positive");
        if (cfg.training.momentum < 0.0 || cfg.training.momentum >= 1.0)
            throw ValidationError("training.momentum: must lie in [0,1)");
        config_detail::require_positive(cfg.training.eval_every, "training.eval_every");
        config_detail::require_positive(cfg.training.final_window, "training.final_window");
    }

    {
        ObjectReader fa(top.has("fedavg") ? top.at("fedavg") : json::object(), "fedavg");
        cfg.fedavg.eta = fa.get<double>("eta", cfg.fedavg.eta);
        cfg.fedavg.local_epochs = fa.get<std::size_t>("local_epochs", cfg.fedavg.local_epochs);
        cfg.fedavg.batch_size = fa.get<std::size_t>("batch_size", cfg.fedavg.batch_size);
        fa.finish();
        config_detail::require_positive(cfg.fedavg.local_epochs, "fedavg.local_epochs");
    }

    {
        ObjectReader po(top.has("poison") ? top.at("poison") : json::object(), "poison");
        cfg.poison.data_nodes = po.get<std::vector<std::size_t>>("data_nodes", {});
        cfg.poison.model_nodes = po.get<std::vector<std::size_t>>("model_nodes", {});
        cfg.poison.poison_validation = po.get<bool>("poison_validation", false);
        po.finish();
        for (std::size_t n : cfg.poison.data_nodes)
            if (n >= cfg.partition.node_count)
                throw ValidationError("poison.data_nodes: node index out of range");
        for (std::size_t n : cfg.poison.model_nodes)
            if (n >= cfg.partition.node_count)
                throw ValidationError("poison.model_nodes: node index out of range");
    }

    {
        ObjectReader ts(top.has("teacher_select") ? top.at("teacher_select") : json::object(),
                        "teacher_select");
        cfg.teacher_select.pretrain_iterations =
            ts.get<std::size_t>("pretrain_iterations", cfg.teacher_select.pretrain_iterations);
        if (ts.has("task_noise_bands")) {
            const json& bands = ts.at("task_noise_bands");
            if (!bands.is_array())
                throw ValidationError("teacher_select.task_noise_bands: expected an array");
            for (const auto& band : bands) {
                if (!band.is_array() || band.size() != 2)
                    throw ValidationError(
                        "teacher_select.task_noise_bands: each entry must be [lo, hi]");
                cfg.teacher_select.task_noise_bands.emplace_back(band[0].get<double>(),
                                                                 band[1].get<double>());
            }
        }
        ts.finish();
    }

    {
        ObjectReader se(top.has("seeds") ? top.at("seeds") : json::object(), "seeds");
        cfg.seeds.data = se.get<std::uint64_t>("data", cfg.seeds.data);
        cfg.seeds.student_init = se.get<std::uint64_t>("student_init", cfg.seeds.student_init);
        cfg.seeds.teacher_init = se.get<std::uint64_t>("teacher_init", cfg.seeds.teacher_init);
        cfg.seeds.scheduler_init = se.get<std::uint64_t>("scheduler_init", cfg.seeds.scheduler_init);
        cfg.seeds.scheduler_sampling =
            se.get<std::uint64_t>("scheduler_sampling", cfg.seeds.scheduler_sampling);
        cfg.seeds.exploration = se.get<std::uint64_t>("exploration", cfg.seeds.exploration);
        cfg.seeds.replay = se.get<std::uint64_t>("replay", cfg.seeds.replay);
        cfg.seeds.encoder = se.get<std::uint64_t>("encoder", cfg.seeds.encoder);
        cfg.seeds.poison = se.get<std::uint64_t>("poison", cfg.seeds.poison);
        se.finish();
    }

    cfg.output_dir = top.get<std::string>("output_dir", cfg.output_dir);
    cfg.dump_curricula = top.get<bool>("dump_curricula", false);
    // Manifests of failed runs carry a "failure" note; accept and ignore it so
    // they stay re-runnable.
    top.get<std::string>("failure", "");
    top.finish();

    // Scenario-level consistency.
    const bool is_data_poison =
        cfg.scenario == Scenario::FlstDataPoison || cfg.scenario == Scenario::FedAvgDataPoison;
    const bool is_model_poison =
        cfg.scenario == Scenario::FlstModelPoison || cfg.scenario == Scenario::FedAvgModelPoison;
    if (is_data_poison && cfg.poison.data_nodes.empty())
        throw ValidationError("scenario " + scenario_name(cfg.scenario) +
                              ": poison.data_nodes must list at least one node");
    if (is_model_poison && cfg.poison.model_nodes.empty())
        throw ValidationError("scenario " + scenario_name(cfg.scenario) +
                              ": poison.model_nodes must list at least one node");
    if (cfg.scenario == Scenario::TeacherSelect) {
        if (cfg.teacher_select.task_noise_bands.empty())
            throw ValidationError(
                "scenario teacher_select: teacher_select.task_noise_bands is required");
        if (cfg.teacher_select.task_noise_bands.size() != cfg.partition.node_count)
            throw ValidationError(
                "scenario teacher_select: one task noise band per node is required");
        if (cfg.dataset.kind == "mnist_idx")
            throw ValidationError("scenario teacher_select: needs a synthetic dataset kind");
    }
    if (cfg.encoder.enabled && cfg.dataset.kind == "synthetic_tabular" &&
        cfg.encoder.latent_dim >= cfg.dataset.feature_dim)
        throw ValidationError("encoder.latent_dim: must be smaller than dataset.feature_dim");
    return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config_json(root);
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// Full round-trip serialization: the manifest written next to a run is this
// JSON and parses back into an identical configuration.
inline json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["scenario"] = scenario_name(cfg.scenario);

    json ds;
    ds["kind"] = cfg.dataset.kind;
    if (cfg.dataset.kind == "synthetic_tabular") {
        ds["class_count"] = cfg.dataset.class_count;
        ds["feature_dim"] = cfg.dataset.feature_dim;
        ds["instances"] = cfg.dataset.instances;
        ds["node_shift"] = cfg.dataset.node_shift;
    } else if (cfg.dataset.kind == "synthetic_digits") {
        ds["instances"] = cfg.dataset.instances;
    } else {
        ds["images"] = cfg.dataset.images_path;
        ds["labels"] = cfg.dataset.labels_path;
        ds["subsample"] = cfg.dataset.subsample;
    }
    if (cfg.dataset.label_noise_enabled)
        ds["label_noise"] = {{"lo", cfg.dataset.label_noise_lo},
                             {"hi", cfg.dataset.label_noise_hi}};
    j["dataset"] = ds;

    j["partition"] = {{"node_count", cfg.partition.node_count},
                      {"scheme", cfg.partition.scheme},
                      {"dirichlet_alpha", cfg.partition.dirichlet_alpha},
                      {"train_fraction", cfg.partition.train_fraction},
                      {"val_fraction", cfg.partition.val_fraction},
                      {"test_fraction", cfg.partition.test_fraction}};
    j["student"] = {{"hidden", cfg.student_hidden}};
    j["teacher"] = {{"hidden", cfg.teacher.hidden},
                    {"gamma", cfg.teacher.gamma},
                    {"target_refresh_k", cfg.teacher.target_refresh_k},
                    {"replay_capacity", cfg.teacher.replay_capacity},
                    {"minibatch_size", cfg.teacher.minibatch_size},
                    {"exploration_noise_std", cfg.teacher.exploration_noise_std},
                    {"learning_rate", cfg.teacher.learning_rate},
                    {"critic_learning_rate", cfg.teacher.critic_learning_rate},
                    {"momentum", cfg.teacher.momentum},
                    {"mode", cfg.teacher.mode},
                    {"pretrain_iterations", cfg.teacher.pretrain_iterations}};
    j["scheduler"] = {{"hidden", cfg.scheduler.hidden},
                      {"epsilon", cfg.scheduler.epsilon},
                      {"entropy_weight", cfg.scheduler.entropy_weight},
                      {"learning_rate", cfg.scheduler.learning_rate},
                      {"momentum", cfg.scheduler.momentum}};
    j["encoder"] = {{"enabled", cfg.encoder.enabled},
                    {"latent_dim", cfg.encoder.latent_dim},
                    {"noise_level", cfg.encoder.noise_level},
                    {"epochs", cfg.encoder.epochs},
                    {"learning_rate", cfg.encoder.learning_rate},
                    {"batch_size", cfg.encoder.batch_size}};
    j["curriculum"] = {{"batch_count", cfg.curriculum.batch_count},
                       {"w_max", cfg.curriculum.w_max},
                       {"metric", cfg.curriculum.metric},
                       {"rank_on_latent", cfg.curriculum.rank_on_latent}};
    j["training"] = {{"iterations", cfg.training.iterations},
                     {"eval_every", cfg.training.eval_every},
                     {"learning_rate", cfg.training.learning_rate},
                     {"momentum", cfg.training.momentum},
                     {"selection", cfg.training.selection},
                     {"top_k", cfg.training.top_k},
                     {"batch_size", cfg.training.batch_size},
                     {"final_window", cfg.training.final_window}};
    j["fedavg"] = {{"eta", cfg.fedavg.eta},
                   {"local_epochs", cfg.fedavg.local_epochs},
                   {"batch_size", cfg.fedavg.batch_size}};
    j["poison"] = {{"data_nodes", cfg.poison.data_nodes},
                   {"model_nodes", cfg.poison.model_nodes},
                   {"poison_validation", cfg.poison.poison_validation}};
    if (!cfg.teacher_select.task_noise_bands.empty()) {
        json bands = json::array();
        for (const auto& [lo, hi] : cfg.teacher_select.task_noise_bands)
            bands.push_back({lo, hi});
        j["teacher_select"] = {{"pretrain_iterations", cfg.teacher_select.pretrain_iterations},
                               {"task_noise_bands", bands}};
    }
    j["seeds"] = {{"data", cfg.seeds.data},
                  {"student_init", cfg.seeds.student_init},
                  {"teacher_init", cfg.seeds.teacher_init},
                  {"scheduler_init", cfg.seeds.scheduler_init},
                  {"scheduler_sampling", cfg.seeds.scheduler_sampling},
                  {"exploration", cfg.seeds.exploration},
                  {"replay", cfg.seeds.replay},
                  {"encoder", cfg.seeds.encoder},
                  {"poison", cfg.seeds.poison}};
    j["output_dir"] = cfg.output_dir;
    j["dump_curricula"] = cfg.dump_curricula;
    return j;
}

} // namespace flst
