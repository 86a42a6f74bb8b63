#pragma once

// Evaluation metrics. Monte-Carlo metrics draw from fresh streams derived from
// an explicit seed, so they never advance the caller's samplers.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "otlab/costs.hpp"
#include "otlab/distributions.hpp"
#include "otlab/nets.hpp"
#include "otlab/oracles.hpp"
#include "otlab/tensor.hpp"

namespace otlab {

using MapFn = std::function<Tensor(const Tensor&)>;

inline MapFn as_map(const Mlp& net)
{
    return [&net](const Tensor& x) { return net.apply(x); };
}
inline MapFn as_map(const AnalyticMap& m)
{
    return [&m](const Tensor& x) { return m.apply(x); };
}

struct MetricReport {
    std::string name;
    double value = 0;
    double spread = 0;  // std over repetitions, when the metric repeats
    std::size_t n_samples = 0;
    std::optional<std::uint64_t> seed;
    std::optional<double> tolerance_used;
};

/// RBF kernel exp(-|a - b|^2 / (2 sigma^2)).
class Kernel {
public:
    static Kernel rbf(double bandwidth);
    /// Bandwidth = median pairwise distance of the pooled samples (first `cap` rows of each).
    static Kernel median_heuristic(const Tensor& x, const Tensor& y, std::size_t cap = 1000);
    /// Same over a single sample set.
    static Kernel median_heuristic(const Tensor& x, std::size_t cap = 1000);
    double bandwidth() const { return sigma_; }
    double operator()(const double* a, const double* b, std::size_t d) const;
    Eigen::MatrixXd gram(const Tensor& x, const Tensor& y) const;

private:
    explicit Kernel(double s) : sigma_(s) {}
    double sigma_;
};

/// 100 * E_P |T_hat(x) - T*(x)|^2 / Var(Q), with Var(Q) the trace of Q's covariance
/// estimated on n samples. n >= 10^4.
MetricReport l2_uvp(const MapFn& t_hat, const AnalyticMap& t_star, const Distribution& P, const Distribution& Q,
                    std::size_t n, std::uint64_t seed);
/// Same, with the sample sets supplied directly (x ~ P, y ~ Q).
double l2_uvp_samples(const Tensor& x, const Tensor& t_hat_x, const Tensor& t_star_x, const Tensor& y);

/// Unbiased U-statistic estimate of MMD^2.
double mmd2(const Tensor& x, const Tensor& y, const Kernel& k);
/// Biased V-statistic (nonnegative, exactly 0 for identical multisets).
double mmd2_biased(const Tensor& x, const Tensor& y, const Kernel& k);

/// Monte-Carlo mean of c(x, T_hat(x)), x ~ P. n >= 10^4.
MetricReport transport_cost_estimate(const MapFn& t_hat, const Distribution& P, const CostFn& c, std::size_t n,
                                     std::uint64_t seed);

/// Mean per-coordinate variance of row-bootstrap resamples; value is the mean and
/// spread the std over `resamples` repetitions. n >= 10^3.
MetricReport palette_variance(const Tensor& samples, std::uint64_t seed, std::size_t resamples = 100);

enum class Discrepancy { kl, mmd2, w2 };
std::string discrepancy_name(Discrepancy d);

struct FvSlope {
    double slope = 0;
    std::vector<double> eps;     // grid points kept in the fit
    std::vector<double> values;  // D(Q + eps (P - Q), Q) at those points
};

/// Least-squares slope of log D(Q + eps (P - Q), Q) against log eps with D computed
/// exactly on the common support (rows of `support`, at most 64). Grid points with
/// D < 1e-14 are dropped; fewer than 3 remaining is an error.
FvSlope fv_slope(Discrepancy kind, const Tensor& support, const std::vector<double>& q, const std::vector<double>& p,
                 const std::vector<double>& eps_grid, std::optional<Kernel> kernel = std::nullopt);

/// Exact D(a, b) for two weight vectors on a common support.
double discrete_discrepancy(Discrepancy kind, const Tensor& support, const std::vector<double>& a,
                            const std::vector<double>& b, const Kernel& k);

/// n log-spaced points from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

}  // namespace otlab
