// Experiment front end: run / validate / summarize.
//
// Exit codes: 0 success, 2 configuration or input problem, 3 numeric failure
// during a run.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flst/flst.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void apply_seed_override(flst::ExperimentConfig& cfg, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw flst::ValidationError("--seed expects name=value, got '" + spec + "'");
    const std::string name = spec.substr(0, eq);
    const std::uint64_t value = std::stoull(spec.substr(eq + 1));
    if (name == "data") cfg.seeds.data = value;
    else if (name == "student_init") cfg.seeds.student_init = value;
    else if (name == "teacher_init") cfg.seeds.teacher_init = value;
    else if (name == "scheduler_init") cfg.seeds.scheduler_init = value;
    else if (name == "scheduler_sampling") cfg.seeds.scheduler_sampling = value;
    else if (name == "exploration") cfg.seeds.exploration = value;
    else if (name == "replay") cfg.seeds.replay = value;
    else if (name == "encoder") cfg.seeds.encoder = value;
    else if (name == "poison") cfg.seeds.poison = value;
    else throw flst::ValidationError("--seed: unknown seed name '" + name + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated student-teacher-scheduler training simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::vector<std::string> seed_overrides;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment from a config file");
    run_cmd->add_option("config", config_path, "Path to the JSON config")->required();
    run_cmd->add_option("--output-dir", output_dir, "Override the config's output directory");
    run_cmd->add_option("--seed", seed_overrides,
                        "Override one seed, e.g. --seed data=42 (repeatable)");

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "Validate a config and print the "
                                                        "resolved manifest");
    validate_cmd->add_option("config", validate_path, "Path to the JSON config")->required();

    std::string metrics_path;
    std::size_t window = 200;
    auto* summarize_cmd = app.add_subcommand("summarize", "Summarize a metrics.csv stream");
    summarize_cmd->add_option("metrics", metrics_path, "Path to metrics.csv")->required();
    summarize_cmd->add_option("--window", window, "Final window size (rows)")
        ->default_val(std::size_t{200});

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            flst::ExperimentConfig cfg = flst::parse_config_file(config_path);
            if (!output_dir.empty()) cfg.output_dir = output_dir;
            for (const auto& spec : seed_overrides) apply_seed_override(cfg, spec);
            const auto summary = flst::run_experiment(cfg);
            std::cout << flst::summary_to_text(summary);
            std::cout << "outputs written to " << cfg.output_dir << "\n";
            return kExitOk;
        }
        if (*validate_cmd) {
            const flst::ExperimentConfig cfg = flst::parse_config_file(validate_path);
            std::cout << flst::config_to_json(cfg).dump(2) << "\n";
            return kExitOk;
        }
        if (*summarize_cmd) {
            std::size_t node_count = 0;
            const auto rows = flst::read_metrics_csv(metrics_path, &node_count);
            const auto summary = flst::emit_summary(rows, node_count, window);
            std::cout << flst::summary_to_text(summary);
            return kExitOk;
        }
    } catch (const flst::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const flst::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const flst::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const flst::DecodeError& e) {
        std::cerr << "decode error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
