#pragma once

// Adversarial training procedures: the OT solver (potential f, map T) and the
// content-regularised WGAN-GP, plus the two-atom toy minimiser.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "otlab/adam.hpp"
#include "otlab/costs.hpp"
#include "otlab/distributions.hpp"
#include "otlab/errors.hpp"
#include "otlab/nets.hpp"

namespace otlab {

struct OtsTraceRow {
    std::size_t iter = 0;
    double loss_f = 0;
    double loss_T = 0;  // last inner map step
    double wall_seconds = 0;
};

struct GanTraceRow {
    std::size_t iter = 0;
    double loss_disc = 0;  // last disc step, penalty included
    double loss_gen = 0;
    double gp = 0;
    double wall_seconds = 0;
};

struct TrainTrace {
    std::vector<OtsTraceRow> ots;
    std::vector<GanTraceRow> gan;
};

/// Thrown when a loss leaves [-limit, limit] or turns non-finite; carries the
/// trace up to and including the offending iteration.
class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, TrainTrace trace) : NumericError(what), trace_(std::move(trace)) {}
    const TrainTrace& trace() const { return trace_; }

private:
    TrainTrace trace_;
};

struct OtsConfig {
    std::size_t k_T = 10;
    double lr_f = 1e-4;
    double lr_T = 1e-4;
    std::size_t batch = 64;
    std::size_t total_f_iters = 2000;
    CostFn cost = CostFn::quadratic();
    std::optional<std::size_t> k_c;  // refresh a dynamic cost every k_c potential iterations
    double divergence_limit = 1e8;
};

struct OtsResult {
    Mlp T;
    Mlp f;
    TrainTrace trace;
    CostFn final_cost;
};

/// Each outer iteration: one descent step of f on mean f(T(x)) - mean f(y), then
/// k_T descent steps of T on mean [c(x, T(x)) - f(T(x))].
OtsResult train_ots(Distribution& P, Distribution& Q, Mlp f, Mlp T, const OtsConfig& cfg);

/// Saddle value L(f, T) = mean f(y) + mean [c(x, T(x)) - f(T(x))] on fresh batches.
double saddle_value(const Mlp& f, const Mlp& T, const CostFn& cost, Distribution& P, Distribution& Q,
                    std::size_t n);

struct GanConfig {
    double lambda = 0.0;
    double lambda_gp = 10.0;
    std::size_t disc_iters_per_gen = 10;
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    std::size_t batch = 64;
    std::size_t total_gen_iters = 2000;
    double divergence_limit = 1e8;
    std::uint64_t seed = 0;  // stream for the penalty interpolation weights
};

struct GanResult {
    Mlp T;
    Mlp disc;
    TrainTrace trace;
};

/// WGAN-GP with content regulariser. The critic minimises
/// mean D(T(x)) - mean D(y) + lambda_gp * mean (|grad D(u T(x) + (1-u) y)| - 1)^2,
/// the generator minimises -mean D(T(x)) + lambda * mean c(x, T(x)).
GanResult train_gan(Distribution& P, Distribution& Q, Mlp gen, Mlp disc, const GanConfig& cfg,
                    const CostFn& content_cost);

struct ExactGanConfig {
    double lambda = 1.0;
    double lr = 1e-3;
    std::size_t iters = 3000;
};

struct ExactGanResult {
    Mlp T;
    std::vector<double> objective;  // per step
};

/// Regularised generator against the exact W2^2 between T#P and Q, for discrete
/// P and Q. The discrepancy gradient comes from the optimal plan (envelope theorem).
ExactGanResult train_gan_exact_w2(const Distribution& P, const Distribution& Q, Mlp gen,
                                  const ExactGanConfig& cfg, const CostFn& content_cost);

/// W2^2 between two weighted point clouds via the transportation simplex.
double discrete_w2(const Tensor& xs, const std::vector<double>& wx, const Tensor& ys, const std::vector<double>& wy);

/// Non-convergence of solve_example1; carries the visited (t0, t2) points.
class ConvergenceError : public NumericError {
public:
    ConvergenceError(const std::string& what, std::vector<std::pair<double, double>> trajectory)
        : NumericError(what), trajectory_(std::move(trajectory)) {}
    const std::vector<std::pair<double, double>>& trajectory() const { return trajectory_; }

private:
    std::vector<std::pair<double, double>> trajectory_;
};

struct Example1Options {
    double step = 0.05;
    double tol = 1e-12;
    std::size_t max_iters = 200000;
};

/// Explicit (sub)gradient descent on min{A, B} + lambda (|t0|/2 + |2 - t2|/2) from
/// (t0, t2) = (0, 2), A = ((t0-1)^2 + (t2-3)^2)/2, B = ((t0-3)^2 + (t2-1)^2)/2.
/// Ties between branches go to A.
std::pair<double, double> solve_example1(double lambda, const Example1Options& opt = {});

/// The two-atom objective itself.
double example1_objective(double lambda, double t0, double t2);

}  // namespace otlab
