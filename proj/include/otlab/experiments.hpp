#pragma once

// Named experiments, their configuration schema and the run report.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "otlab/config.hpp"
#include "otlab/metrics.hpp"
#include "otlab/solvers.hpp"

namespace otlab {

enum class ExperimentKind { bench_gaussian, example1, bias_sweep, toy_sr, fv_check };

std::string experiment_name(ExperimentKind k);
/// Throws ConfigError for names outside the known set.
ExperimentKind parse_experiment_name(const std::string& name);

/// gaussian: mean, cov. random-spd: dim, drawn from the replicate seed.
struct DistSpec {
    std::string kind = "gaussian";
    std::vector<double> mean;
    std::vector<std::vector<double>> cov;
    std::size_t dim = 2;
    bool operator==(const DistSpec&) const = default;
};

struct NetSpec {
    std::size_t width = 64;
    std::size_t depth = 3;  // affine layers
    double leaky_slope = 0.2;
    bool operator==(const NetSpec&) const = default;
};

struct OtsSpec {
    std::size_t k_T = 10;
    double lr_f = 1e-4;
    double lr_T = 1e-4;
    std::size_t batch = 64;
    std::size_t total_f_iters = 2000;
    std::string cost = "mse";  // quadratic | mse | mae | feature
    std::size_t k_c = 0;       // 0: static cost
    bool operator==(const OtsSpec&) const = default;
};

struct GanSpec {
    std::vector<double> lambdas{0, 0.1, 1, 10, 100, 1000, 10000, 100000};
    double lambda_gp = 10;
    std::size_t disc_iters_per_gen = 10;
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    std::size_t batch = 64;
    std::size_t total_gen_iters = 2000;
    bool operator==(const GanSpec&) const = default;
};

struct EvalSpec {
    std::size_t n_samples = 10000;
    std::size_t mmd_samples = 1000;
    std::size_t lemma_batch = 128;
    std::size_t palette_resamples = 100;
    bool operator==(const EvalSpec&) const = default;
};

struct Example1Spec {
    std::vector<double> lambdas{0.2, 0.6, 1.0, 1.4, 1.8};
    double step = 0.05;
    double tol = 1e-12;
    std::size_t max_iters = 200000;
    double gan_lambda = 1.0;
    double gan_lr = 1e-3;
    std::size_t gan_iters = 3000;
    std::string gan_content = "mae";
    bool operator==(const Example1Spec&) const = default;
};

struct SrSpec {
    std::size_t signal_dim = 32;
    std::size_t blur_width = 4;
    std::size_t stride = 4;
    double smoothing_width = 2.0;
    std::string upsampler = "linear";
    bool operator==(const SrSpec&) const = default;
};

struct FvSpec {
    std::size_t instances = 20;
    std::size_t support_size = 8;
    std::size_t dim = 2;
    double eps_min = 1e-3;
    double eps_max = 1e-1;
    std::size_t eps_points = 9;
    bool operator==(const FvSpec&) const = default;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::bench_gaussian;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::size_t replicates = 1;
    std::size_t workers = 0;  // 0: one per hardware thread
    DistSpec source;
    DistSpec target;
    NetSpec net;
    OtsSpec ots;
    GanSpec gan;
    EvalSpec eval;
    Example1Spec example1;
    SrSpec sr;
    FvSpec fv;
    bool operator==(const ExperimentConfig&) const = default;
};

/// Strict: unknown keys and sections the experiment does not use are errors.
ExperimentConfig config_from_table(const ConfigValue::Table& table);
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);
/// Every field the experiment reads, defaults included.
ConfigValue::Table config_to_table(const ExperimentConfig& cfg);
std::string canonical_config_text(const ExperimentConfig& cfg);
/// Git blob id: SHA-1 of "blob <len>\0" followed by the text.
std::string git_blob_sha1(const std::string& text);

struct CsvTable {
    std::string name;  // file stem, "table_" prefix added on write
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::string comment;
};

struct NamedTrace {
    std::string name;  // file stem, "trace_" prefix added on write
    TrainTrace trace;
};

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct RunReport {
    std::string experiment;
    std::uint64_t seed = 0;
    std::string config_text;
    std::string config_hash;
    std::vector<MetricReport> metrics;
    std::vector<Check> checks;
    std::vector<CsvTable> tables;
    std::vector<NamedTrace> traces;
    std::vector<std::string> notes;
    double wall_clock_seconds = 0;

    /// Value of the metric called `name`; throws ContractError if absent.
    double metric(const std::string& name) const;
    const MetricReport* find_metric(const std::string& name) const;
    const Check* find_check(const std::string& name) const;
};

/// Dispatch on cfg.experiment.
RunReport run_experiment(const ExperimentConfig& cfg);
RunReport run_bench_gaussian(const ExperimentConfig& cfg);
RunReport run_bias_sweep(const ExperimentConfig& cfg);
RunReport run_example1(const ExperimentConfig& cfg);
RunReport run_toy_sr(const ExperimentConfig& cfg);
RunReport run_fv_check(const ExperimentConfig& cfg);

/// Writes report.json, table_*.csv and trace_*.csv into `dir` (created if needed).
void write_report(const RunReport& report, const std::string& dir);
/// The JSON document written as report.json.
std::string report_json(const RunReport& report);

/// `%.17g`, with "nan"/"inf" spelled out.
std::string format_number(double v);

/// Runs tasks on `workers` threads (0: hardware concurrency); rethrows the first
/// exception after all tasks finish.
void run_pool(std::vector<std::function<void()>> tasks, std::size_t workers);

}  // namespace otlab
