// dopoqb command-line experiment runner.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dopoqb/config.hpp"
#include "dopoqb/experiments.hpp"
#include "dopoqb/version.hpp"

namespace {

constexpr int kExitConfigError = 1;
constexpr int kExitIntegrationError = 2;
constexpr int kExitFitError = 3;
constexpr int kExitCheckMiss = 4;

dopoqb::ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw dopoqb::ConfigError("cannot open config file: " + path);
    return dopoqb::parse_config(in);
}

std::filesystem::path resolve_out_dir(const std::string& flag_dir,
                                      const dopoqb::ExperimentConfig& cfg,
                                      const std::string& experiment) {
    if (!flag_dir.empty()) return flag_dir;
    if (const char* env = std::getenv("DOPOQB_OUT_DIR")) return env;
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    return std::filesystem::path("out") / experiment;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dopoqb — degenerate-OPO quantum battery simulator"};
    app.set_version_flag("--version", dopoqb::kVersion);
    app.require_subcommand(1);

    std::string experiment, config_path, out_dir;
    bool check = false;
    int threads = 0;

    CLI::App* run = app.add_subcommand("run", "run a named experiment");
    run->add_option("experiment", experiment, "experiment name (see `list`)")->required();
    run->add_option("--config", config_path, "configuration file");
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--check", check, "exit nonzero unless all reference targets pass");
    run->add_option("--threads", threads, "worker count for parameter sweeps");

    std::string validate_path;
    CLI::App* validate = app.add_subcommand("validate", "check a configuration file");
    validate->add_option("--config", validate_path, "configuration file")->required();

    CLI::App* list = app.add_subcommand("list", "print the experiment catalog");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& e : dopoqb::experiment_catalog())
                std::cout << e.name << "\t" << e.description << "\n";
            return 0;
        }
        if (validate->parsed()) {
            const auto cfg = load_config(validate_path);
            const auto diags = dopoqb::validate_config(cfg);
            for (const auto& d : diags) std::cout << "warning: " << d << "\n";
            std::cout << (diags.empty() ? "config ok" : "config ok with warnings") << "\n";
            return 0;
        }

        // run
        dopoqb::ExperimentConfig cfg = load_config(config_path);
        if (threads > 0) cfg.threads = threads;
        const auto dir = resolve_out_dir(out_dir, cfg, experiment);
        const auto result = dopoqb::run_experiment(experiment, cfg, dir);
        for (const auto& f : result.files) std::cout << dir.string() << "/" << f << "\n";
        std::cout << (result.summary.all_pass() ? "targets: pass" : "targets: MISS") << "\n";
        if (check && !result.summary.all_pass()) return kExitCheckMiss;
        return 0;
    } catch (const dopoqb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const dopoqb::IntegrationError& e) {
        std::cerr << "integration error: " << e.what() << "\n";
        return kExitIntegrationError;
    } catch (const dopoqb::InstabilityError& e) {
        std::cerr << "integration error: " << e.what() << "\n";
        return kExitIntegrationError;
    } catch (const dopoqb::StateValidationError& e) {
        std::cerr << "integration error: " << e.what() << "\n";
        return kExitIntegrationError;
    } catch (const dopoqb::TruncationError& e) {
        std::cerr << "integration error: " << e.what() << "\n";
        return kExitIntegrationError;
    } catch (const dopoqb::FitError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return kExitFitError;
    } catch (const dopoqb::NotConvergedError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return kExitFitError;
    }
}
