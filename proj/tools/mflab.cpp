// Experiment runner: `mflab list`, `mflab run <config>`.
#include "mflab/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

constexpr int kPass = 0;
constexpr int kCheckFailure = 1;
constexpr int kUsageError = 2;

int run_config(const std::string& path, const std::string& output_override) {
    namespace ex = mflab::experiments;
    ex::ExperimentConfig cfg;
    try {
        cfg = ex::load_config(path);
    } catch (const ex::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsageError;
    }
    if (!output_override.empty()) {
        cfg.output_dir = output_override;
    } else if (const char* env = std::getenv("MFLAB_OUTPUT_DIR"); env && *env) {
        cfg.output_dir = env;
    }
    try {
        const auto result = ex::run(cfg);
        ex::print_summary(std::cout, result);
        return result.pass() ? kPass : kCheckFailure;
    } catch (const ex::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsageError;
    } catch (const mflab::Error& e) {
        std::cerr << cfg.experiment << ": " << e.what() << '\n';
        return kCheckFailure;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << cfg.experiment << ": " << e.what() << '\n';
        return kUsageError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field game and law-process experiments"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list", "Print the experiment catalogue with default knobs");

    std::string config_path;
    std::string output_dir;
    auto* run = app.add_subcommand("run", "Run the experiment described by an INI config file");
    run->add_option("config", config_path, "Config file ([experiment], [knobs], [model] sections)")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("-o,--output-dir", output_dir,
                    "Output directory; overrides the config and the MFLAB_OUTPUT_DIR environment variable");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    if (list->parsed()) {
        mflab::experiments::print_catalogue(std::cout);
        return kPass;
    }
    return run_config(config_path, output_dir);
}
