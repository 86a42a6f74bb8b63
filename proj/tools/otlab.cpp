#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "otlab/errors.hpp"
#include "otlab/experiments.hpp"

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, divergence = 3 };

void print_summary(const otlab::RunReport& r, const std::string& dir)
{
    std::printf("%s seed=%llu config=%s\n", r.experiment.c_str(), static_cast<unsigned long long>(r.seed),
                r.config_hash.c_str());
    for (const auto& c : r.checks)
        std::printf("  check %-24s %s%s%s\n", c.name.c_str(), c.passed ? "pass" : "FAIL",
                    c.detail.empty() ? "" : "  ", c.detail.c_str());
    for (const auto& n : r.notes)
        std::printf("  note  %s\n", n.c_str());
    std::printf("wrote %s/report.json (%.1f s)\n", dir.c_str(), r.wall_clock_seconds);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Run a named optimal-transport experiment from a config file."};
    std::string experiment, config_path, out_dir;
    std::int64_t seed = -1;
    std::size_t workers = 0;
    bool print_config = false;
    app.add_option("experiment", experiment, "bench-gaussian | example1 | bias-sweep | toy-sr | fv-check")
        ->required();
    app.add_option("--config", config_path, "TOML config file")->required();
    app.add_option("--seed", seed, "override the config seed")->check(CLI::NonNegativeNumber);
    auto* out_opt = app.add_option("--out", out_dir, "override the output directory");
    auto* workers_opt = app.add_option("--workers", workers, "sweep worker threads (0: one per core)");
    app.add_flag("--print-config", print_config, "print the resolved config and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        otlab::ExperimentConfig cfg = otlab::load_config(config_path);
        if (otlab::parse_experiment_name(experiment) != cfg.experiment)
            throw otlab::ConfigError("command names " + experiment + " but the config is for " +
                                     otlab::experiment_name(cfg.experiment));
        if (seed >= 0)
            cfg.seed = static_cast<std::uint64_t>(seed);
        if (*out_opt)
            cfg.output_dir = out_dir;
        if (*workers_opt)
            cfg.workers = workers;
        if (print_config) {
            std::cout << otlab::canonical_config_text(cfg);
            return ok;
        }
        otlab::RunReport report = otlab::run_experiment(cfg);
        otlab::write_report(report, cfg.output_dir);
        print_summary(report, cfg.output_dir);
        return ok;
    } catch (const otlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const otlab::DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << "\n";
        return divergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
}
