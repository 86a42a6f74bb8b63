#include "otlab/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "otlab/errors.hpp"

namespace otlab {

namespace {

void require_spd(const Eigen::MatrixXd& m, const char* what)
{
    if (m.rows() != m.cols() || m.rows() == 0)
        throw DimensionError(std::string(what) + ": covariance must be square");
    if (!m.isApprox(m.transpose(), 1e-12))
        throw DomainError(std::string(what) + ": covariance is not symmetric");
}

Eigen::MatrixXd spd_power(const Eigen::MatrixXd& m, double power, double floor)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success)
        throw NumericError("eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    if (ev.minCoeff() < floor)
        throw DomainError("matrix is degenerate (eigenvalue " + std::to_string(ev.minCoeff()) + ")");
    Eigen::VectorXd p = ev.array().pow(power);
    return es.eigenvectors() * p.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& m, double floor) { return spd_power(m, 0.5, floor); }

AnalyticMap AnalyticMap::affine(Eigen::VectorXd source_mean, Eigen::VectorXd target_mean, Eigen::MatrixXd linear)
{
    if (linear.rows() != target_mean.size() || linear.cols() != source_mean.size())
        throw DimensionError("affine map: dimensions do not match");
    AnalyticMap out;
    out.kind_ = Kind::gaussian_quadratic;
    out.source_mean_ = std::move(source_mean);
    out.target_mean_ = std::move(target_mean);
    out.linear_ = std::move(linear);
    return out;
}

AnalyticMap AnalyticMap::example1(double lambda)
{
    AnalyticMap out;
    out.kind_ = Kind::example1;
    std::tie(out.t0_, out.t2_) = example1_solution(lambda);
    return out;
}

AnalyticMap AnalyticMap::monotone_1d(std::vector<double> source_samples, std::vector<double> target_samples)
{
    if (source_samples.size() < 2 || target_samples.size() < 2)
        throw ContractError("monotone rearrangement needs at least two samples per side");
    std::sort(source_samples.begin(), source_samples.end());
    std::sort(target_samples.begin(), target_samples.end());
    AnalyticMap out;
    out.kind_ = Kind::monotone_1d;
    out.source_sorted_ = std::move(source_samples);
    out.target_sorted_ = std::move(target_samples);
    return out;
}

std::size_t AnalyticMap::dim() const
{
    switch (kind_) {
    case Kind::gaussian_quadratic: return static_cast<std::size_t>(linear_.cols());
    default: return 1;
    }
}

Tensor AnalyticMap::apply(const Tensor& x) const
{
    switch (kind_) {
    case Kind::gaussian_quadratic: {
        if (x.cols() != static_cast<std::size_t>(linear_.cols()))
            throw DimensionError("analytic map: input dim mismatch");
        Eigen::MatrixXd xm = to_eigen(x);
        Eigen::MatrixXd centred = xm.rowwise() - source_mean_.transpose();
        Eigen::MatrixXd y = (centred * linear_.transpose()).rowwise() + target_mean_.transpose();
        return from_eigen(y);
    }
    case Kind::example1: {
        if (x.cols() != 1)
            throw DimensionError("example-1 map is one-dimensional");
        Tensor out(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] == 0.0)
                out[i] = t0_;
            else if (x[i] == 2.0)
                out[i] = t2_;
            else
                throw DomainError("example-1 map is only defined on the atoms {0, 2}");
        }
        return out;
    }
    case Kind::monotone_1d: {
        if (x.cols() != 1)
            throw DimensionError("monotone rearrangement is one-dimensional");
        const auto& s = source_sorted_;
        const auto& t = target_sorted_;
        Tensor out(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) {
            // Fractional rank of x among the sorted source samples, in [0, 1].
            double q;
            if (x[i] <= s.front()) {
                q = 0.0;
            } else if (x[i] >= s.back()) {
                q = 1.0;
            } else {
                auto it = std::upper_bound(s.begin(), s.end(), x[i]);
                auto hi = static_cast<std::size_t>(it - s.begin());
                std::size_t lo = hi - 1;
                double w = s[hi] > s[lo] ? (x[i] - s[lo]) / (s[hi] - s[lo]) : 0.0;
                q = (static_cast<double>(lo) + w) / static_cast<double>(s.size() - 1);
            }
            double pos = q * static_cast<double>(t.size() - 1);
            auto lo = static_cast<std::size_t>(std::floor(pos));
            lo = std::min(lo, t.size() - 2);
            double w = pos - static_cast<double>(lo);
            out[i] = (1.0 - w) * t[lo] + w * t[lo + 1];
        }
        return out;
    }
    }
    throw ContractError("unknown analytic map kind");
}

AnalyticMap gaussian_ot_map(const Eigen::VectorXd& mean_p, const Eigen::MatrixXd& cov_p,
                            const Eigen::VectorXd& mean_q, const Eigen::MatrixXd& cov_q)
{
    require_spd(cov_p, "gaussian_ot_map");
    require_spd(cov_q, "gaussian_ot_map");
    if (cov_p.rows() != cov_q.rows() || mean_p.size() != cov_p.rows() || mean_q.size() != cov_q.rows())
        throw DimensionError("gaussian_ot_map: dimensions do not match");
    Eigen::MatrixXd p_half = spd_power(cov_p, 0.5, 1e-12);
    Eigen::MatrixXd p_inv_half = spd_power(cov_p, -0.5, 1e-12);
    spd_power(cov_q, 1.0, 1e-12);  // rejects a degenerate target covariance
    Eigen::MatrixXd middle = p_half * cov_q * p_half;
    middle = 0.5 * (middle + middle.transpose());
    Eigen::MatrixXd a = p_inv_half * spd_sqrt(middle) * p_inv_half;
    a = 0.5 * (a + a.transpose());
    return AnalyticMap::affine(mean_p, mean_q, a);
}

double bures_wasserstein2(const Eigen::VectorXd& mean_p, const Eigen::MatrixXd& cov_p,
                          const Eigen::VectorXd& mean_q, const Eigen::MatrixXd& cov_q)
{
    require_spd(cov_p, "bures_wasserstein2");
    require_spd(cov_q, "bures_wasserstein2");
    Eigen::MatrixXd p_half = spd_sqrt(cov_p);
    Eigen::MatrixXd middle = p_half * cov_q * p_half;
    middle = 0.5 * (middle + middle.transpose());
    double tr = (cov_p + cov_q - 2.0 * spd_sqrt(middle)).trace();
    return (mean_p - mean_q).squaredNorm() + tr;
}

DiscretePlan discrete_ot(const Tensor& x, const Tensor& y, const CostFn& c)
{
    if (x.rows() != y.rows())
        throw DimensionError("discrete_ot: point counts differ (" + std::to_string(x.rows()) + " vs " +
                             std::to_string(y.rows()) + ")");
    if (x.rows() > max_discrete_ot_points)
        throw ContractError("discrete_ot supports at most 256 points");
    Eigen::MatrixXd cost = c.pairwise(x, y);
    Assignment a = solve_assignment(cost);
    DiscretePlan plan;
    plan.assignment = std::move(a.row_to_col);
    plan.total_cost = a.total / static_cast<double>(x.rows());
    return plan;
}

std::pair<double, double> example1_solution(double lambda)
{
    if (!(lambda > 0.0 && lambda < 2.0))
        throw DomainError("example-1 closed form holds for 0 < lambda < 2");
    return {1.0 - lambda / 2.0, 3.0 - lambda / 2.0};
}

}  // namespace otlab
