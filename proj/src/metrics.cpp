#include "otlab/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "otlab/errors.hpp"
#include "otlab/rng.hpp"

namespace otlab {

namespace {

void require_finite_value(const MetricReport& r)
{
    if (!std::isfinite(r.value))
        throw NumericError("metric " + r.name + " is not finite");
}

double squared_distance(const double* a, const double* b, std::size_t d)
{
    double s = 0;
    for (std::size_t k = 0; k < d; ++k) {
        double t = a[k] - b[k];
        s += t * t;
    }
    return s;
}

const double* row_ptr(const Tensor& t, std::size_t i) { return t.data().data() + i * t.cols(); }

double trace_covariance(const Tensor& y)
{
    Eigen::MatrixXd m = to_eigen(y);
    Eigen::RowVectorXd mu = m.colwise().mean();
    Eigen::MatrixXd c = m.rowwise() - mu;
    return c.squaredNorm() / static_cast<double>(m.rows() - 1);
}

}  // namespace

Kernel Kernel::rbf(double bandwidth)
{
    if (!(bandwidth > 0) || !std::isfinite(bandwidth))
        throw ConfigError("RBF bandwidth must be positive");
    return Kernel(bandwidth);
}

namespace {

Kernel median_of_pairs(const std::vector<const double*>& pts, std::size_t d);

}  // namespace

Kernel Kernel::median_heuristic(const Tensor& x, const Tensor& y, std::size_t cap)
{
    if (x.cols() != y.cols())
        throw DimensionError("median heuristic: sample dims differ");
    std::vector<const double*> pts;
    for (std::size_t i = 0; i < std::min(cap, x.rows()); ++i)
        pts.push_back(row_ptr(x, i));
    for (std::size_t i = 0; i < std::min(cap, y.rows()); ++i)
        pts.push_back(row_ptr(y, i));
    return median_of_pairs(pts, x.cols());
}

Kernel Kernel::median_heuristic(const Tensor& x, std::size_t cap)
{
    std::vector<const double*> pts;
    for (std::size_t i = 0; i < std::min(cap, x.rows()); ++i)
        pts.push_back(row_ptr(x, i));
    return median_of_pairs(pts, x.cols());
}

namespace {

Kernel median_of_pairs(const std::vector<const double*>& pts, std::size_t d)
{
    std::vector<double> dists;
    if (pts.size() >= 2)
        dists.reserve(pts.size() * (pts.size() - 1) / 2);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            dists.push_back(std::sqrt(squared_distance(pts[i], pts[j], d)));
    if (dists.empty())
        throw ContractError("median heuristic needs at least two points");
    const std::size_t n = dists.size();
    auto hi = dists.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(dists.begin(), hi, dists.end());
    double med = *hi;
    if (n % 2 == 0)
        med = 0.5 * (med + *std::max_element(dists.begin(), hi));
    if (!(med > 0))
        throw DomainError("median heuristic: median pairwise distance is zero");
    return Kernel::rbf(med);
}

}  // namespace

double Kernel::operator()(const double* a, const double* b, std::size_t d) const
{
    return std::exp(-squared_distance(a, b, d) / (2.0 * sigma_ * sigma_));
}

Eigen::MatrixXd Kernel::gram(const Tensor& x, const Tensor& y) const
{
    if (x.cols() != y.cols())
        throw DimensionError("kernel gram: sample dims differ");
    Eigen::MatrixXd g(static_cast<Eigen::Index>(x.rows()), static_cast<Eigen::Index>(y.rows()));
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < y.rows(); ++j)
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                (*this)(row_ptr(x, i), row_ptr(y, j), x.cols());
    return g;
}

double l2_uvp_samples(const Tensor& x, const Tensor& t_hat_x, const Tensor& t_star_x, const Tensor& y)
{
    if (t_hat_x.shape() != t_star_x.shape() || t_hat_x.rows() != x.rows())
        throw DimensionError("l2_uvp: map outputs do not match");
    if (y.cols() != t_star_x.cols())
        throw DimensionError("l2_uvp: target dim does not match map output");
    double var = trace_covariance(y);
    if (var < 1e-12)
        throw DomainError("l2_uvp: target variance is below 1e-12");
    double err = 0;
    for (std::size_t i = 0; i < t_hat_x.size(); ++i) {
        double d = t_hat_x[i] - t_star_x[i];
        err += d * d;
    }
    return 100.0 * err / static_cast<double>(x.rows()) / var;
}

MetricReport l2_uvp(const MapFn& t_hat, const AnalyticMap& t_star, const Distribution& P, const Distribution& Q,
                    std::size_t n, std::uint64_t seed)
{
    if (n < 10000)
        throw ContractError("l2_uvp needs n >= 10^4 samples");
    Distribution p = P.with_stream(derive_seed(seed, "l2uvp-p"));
    Distribution q = Q.with_stream(derive_seed(seed, "l2uvp-q"));
    Tensor x = p.sample(n);
    Tensor y = q.sample(n);
    MetricReport r{"l2_uvp", l2_uvp_samples(x, t_hat(x), t_star.apply(x), y), 0, n, seed, {}};
    require_finite_value(r);
    return r;
}

double mmd2(const Tensor& x, const Tensor& y, const Kernel& k)
{
    const std::size_t n = x.rows(), m = y.rows(), d = x.cols();
    if (n < 2 || m < 2)
        throw ContractError("mmd2 needs at least two samples on each side");
    if (y.cols() != d)
        throw DimensionError("mmd2: sample dims differ");
    double kxx = 0, kyy = 0, kxy = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            kxx += k(row_ptr(x, i), row_ptr(x, j), d);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            kyy += k(row_ptr(y, i), row_ptr(y, j), d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            kxy += k(row_ptr(x, i), row_ptr(y, j), d);
    auto dn = static_cast<double>(n), dm = static_cast<double>(m);
    return 2.0 * kxx / (dn * (dn - 1)) + 2.0 * kyy / (dm * (dm - 1)) - 2.0 * kxy / (dn * dm);
}

double mmd2_biased(const Tensor& x, const Tensor& y, const Kernel& k)
{
    if (x.rows() < 1 || y.rows() < 1)
        throw ContractError("mmd2 needs samples on each side");
    auto dn = static_cast<double>(x.rows()), dm = static_cast<double>(y.rows());
    double v = k.gram(x, x).sum() / (dn * dn) + k.gram(y, y).sum() / (dm * dm) - 2.0 * k.gram(x, y).sum() / (dn * dm);
    return std::max(v, 0.0);
}

MetricReport transport_cost_estimate(const MapFn& t_hat, const Distribution& P, const CostFn& c, std::size_t n,
                                     std::uint64_t seed)
{
    if (n < 10000)
        throw ContractError("transport_cost_estimate needs n >= 10^4 samples");
    Distribution p = P.with_stream(derive_seed(seed, "transport-cost"));
    Tensor x = p.sample(n);
    MetricReport r{"transport_cost", mean(c.eval(x, t_hat(x))), 0, n, seed, {}};
    require_finite_value(r);
    return r;
}

MetricReport palette_variance(const Tensor& samples, std::uint64_t seed, std::size_t resamples)
{
    const std::size_t n = samples.rows(), d = samples.cols();
    if (n < 1000)
        throw ContractError("palette_variance needs n >= 10^3 samples");
    if (resamples < 2)
        throw ContractError("palette_variance needs at least two resamples");
    Rng rng = make_rng(seed, "palette");
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> vals;
    vals.reserve(resamples);
    std::vector<double> sum(d), sq(d);
    for (std::size_t r = 0; r < resamples; ++r) {
        std::fill(sum.begin(), sum.end(), 0.0);
        std::fill(sq.begin(), sq.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = row_ptr(samples, pick(rng));
            for (std::size_t k = 0; k < d; ++k) {
                sum[k] += row[k];
                sq[k] += row[k] * row[k];
            }
        }
        double v = 0;
        auto dn = static_cast<double>(n);
        for (std::size_t k = 0; k < d; ++k)
            v += std::max(0.0, (sq[k] - sum[k] * sum[k] / dn) / (dn - 1));
        vals.push_back(v / static_cast<double>(d));
    }
    double m = 0;
    for (double v : vals)
        m += v;
    m /= static_cast<double>(resamples);
    double s = 0;
    for (double v : vals)
        s += (v - m) * (v - m);
    MetricReport r{"palette_variance", m, std::sqrt(s / static_cast<double>(resamples - 1)), n, seed, {}};
    require_finite_value(r);
    return r;
}

std::string discrepancy_name(Discrepancy d)
{
    switch (d) {
    case Discrepancy::kl: return "kl";
    case Discrepancy::mmd2: return "mmd2";
    case Discrepancy::w2: return "w2";
    }
    return "?";
}

double discrete_discrepancy(Discrepancy kind, const Tensor& support, const std::vector<double>& a,
                            const std::vector<double>& b, const Kernel& k)
{
    const std::size_t n = support.rows();
    if (a.size() != n || b.size() != n)
        throw DimensionError("discrete discrepancy: weights do not match the support");
    switch (kind) {
    case Discrepancy::kl: {
        double v = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (a[i] <= 0)
                continue;
            if (b[i] <= 0)
                throw DomainError("KL is infinite: reference has no mass where the argument does");
            v += a[i] * std::log(a[i] / b[i]);
        }
        return v;
    }
    case Discrepancy::mmd2: {
        Eigen::VectorXd delta(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            delta(static_cast<Eigen::Index>(i)) = a[i] - b[i];
        return delta.dot(k.gram(support, support) * delta);
    }
    case Discrepancy::w2: {
        Eigen::VectorXd va = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(n));
        Eigen::VectorXd vb = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(n));
        // Rescale the tiny total-mass drift that mixing introduces.
        va /= va.sum();
        vb /= vb.sum();
        return solve_transportation(va, vb, CostFn::quadratic().pairwise(support, support)).cost;
    }
    }
    throw ContractError("unknown discrepancy");
}

FvSlope fv_slope(Discrepancy kind, const Tensor& support, const std::vector<double>& q, const std::vector<double>& p,
                 const std::vector<double>& eps_grid, std::optional<Kernel> kernel)
{
    const std::size_t n = support.rows();
    if (n > 64)
        throw ContractError("fv_slope supports at most 64 atoms");
    if (q.size() != n || p.size() != n)
        throw DimensionError("fv_slope: weights do not match the support");
    if (eps_grid.size() < 5)
        throw ContractError("fv_slope needs at least 5 grid points");
    for (double e : eps_grid)
        if (!(e > 0 && e <= 0.1))
            throw ContractError("fv_slope grid points must lie in (0, 0.1]");
    Kernel k = kernel ? *kernel : (n >= 2 ? Kernel::median_heuristic(support) : Kernel::rbf(1.0));

    FvSlope out;
    std::vector<double> mixed(n);
    for (double e : eps_grid) {
        for (std::size_t i = 0; i < n; ++i)
            mixed[i] = q[i] + e * (p[i] - q[i]);
        double v = discrete_discrepancy(kind, support, mixed, q, k);
        if (v < 1e-14)
            continue;
        out.eps.push_back(e);
        out.values.push_back(v);
    }
    if (out.eps.size() < 3)
        throw NumericError("fv_slope: fewer than 3 grid points with D >= 1e-14");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < out.eps.size(); ++i) {
        mx += std::log(out.eps[i]);
        my += std::log(out.values[i]);
    }
    auto m = static_cast<double>(out.eps.size());
    mx /= m;
    my /= m;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < out.eps.size(); ++i) {
        double dx = std::log(out.eps[i]) - mx;
        sxy += dx * (std::log(out.values[i]) - my);
        sxx += dx * dx;
    }
    out.slope = sxy / sxx;
    return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n)
{
    if (!(lo > 0 && hi > lo) || n < 2)
        throw ContractError("log_grid needs 0 < lo < hi and n >= 2");
    std::vector<double> g(n);
    double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    g.back() = hi;
    return g;
}

}  // namespace otlab
