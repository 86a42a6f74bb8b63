#pragma once

// Exact and closed-form optimal transport ground truths.

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "otlab/costs.hpp"
#include "otlab/tensor.hpp"

namespace otlab {

/// Minimum-cost perfect matching of a square cost matrix (Hungarian method with
/// potentials, O(n^3)). row_to_col[i] is the column matched to row i.
struct Assignment {
    std::vector<std::size_t> row_to_col;
    double total = 0.0;
};
Assignment solve_assignment(const Eigen::MatrixXd& cost);

/// Optimal plan of the balanced transportation problem
/// min <C, F> s.t. F 1 = supply, F^T 1 = demand, F >= 0 (MODI simplex).
struct TransportPlan {
    Eigen::MatrixXd flow;
    double cost = 0.0;
    std::size_t pivots = 0;
};
TransportPlan solve_transportation(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                                   const Eigen::MatrixXd& cost);

/// Symmetric PSD square root by eigendecomposition; throws DomainError if the
/// smallest eigenvalue is below `floor` (degenerate matrices are rejected).
Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& m, double floor = 1e-12);

/// Closed-form transport maps used as references.
class AnalyticMap {
public:
    enum class Kind { gaussian_quadratic, example1, monotone_1d };

    static AnalyticMap affine(Eigen::VectorXd source_mean, Eigen::VectorXd target_mean, Eigen::MatrixXd linear);
    static AnalyticMap example1(double lambda);
    /// Quantile matching of two 1-D samples; nondecreasing.
    static AnalyticMap monotone_1d(std::vector<double> source_samples, std::vector<double> target_samples);

    Kind kind() const { return kind_; }
    std::size_t dim() const;
    Tensor apply(const Tensor& x) const;

    const Eigen::MatrixXd& linear() const { return linear_; }
    const Eigen::VectorXd& source_mean() const { return source_mean_; }
    const Eigen::VectorXd& target_mean() const { return target_mean_; }
    std::pair<double, double> example1_values() const { return {t0_, t2_}; }

private:
    Kind kind_ = Kind::gaussian_quadratic;
    Eigen::VectorXd source_mean_, target_mean_;
    Eigen::MatrixXd linear_;
    double t0_ = 0, t2_ = 0;
    std::vector<double> source_sorted_, target_sorted_;
};

/// T*(x) = mQ + A (x - mP) with A = SP^-1/2 (SP^1/2 SQ SP^1/2)^1/2 SP^-1/2.
AnalyticMap gaussian_ot_map(const Eigen::VectorXd& mean_p, const Eigen::MatrixXd& cov_p,
                            const Eigen::VectorXd& mean_q, const Eigen::MatrixXd& cov_q);

/// W2^2 between Gaussians: |mP - mQ|^2 + tr(SP + SQ - 2 (SP^1/2 SQ SP^1/2)^1/2).
double bures_wasserstein2(const Eigen::VectorXd& mean_p, const Eigen::MatrixXd& cov_p,
                          const Eigen::VectorXd& mean_q, const Eigen::MatrixXd& cov_q);

/// Optimal bijection between two equal-size uniform empirical measures.
struct DiscretePlan {
    std::vector<std::size_t> assignment;  // x_i -> y_assignment[i]
    double total_cost = 0.0;              // mean_i c(x_i, y_assignment[i])
};
inline constexpr std::size_t max_discrete_ot_points = 256;
DiscretePlan discrete_ot(const Tensor& x, const Tensor& y, const CostFn& c);

/// Biased minimiser of the two-atom regularised objective: (1 - lambda/2, 3 - lambda/2).
/// Defined on 0 < lambda < 2.
std::pair<double, double> example1_solution(double lambda);

}  // namespace otlab
