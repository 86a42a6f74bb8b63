#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "gradcheck.hpp"
#include "otlab/errors.hpp"
#include "otlab/metrics.hpp"
#include "otlab/oracles.hpp"

using namespace otlab;

namespace {

AnalyticMap one_d_map()
{
    return gaussian_ot_map(Eigen::VectorXd::Constant(1, 0), Eigen::MatrixXd::Identity(1, 1),
                           Eigen::VectorXd::Constant(1, 2), 4 * Eigen::MatrixXd::Identity(1, 1));
}

}  // namespace

TEST_CASE("l2_uvp of a shifted oracle map is 100 |c|^2 / Var(Q)")
{
    Rng r = make_rng(1, "uvp");
    Tensor x = gradcheck::uniform(r, {500, 2}, -1, 1), y = gradcheck::uniform(r, {500, 2}, -3, 3);
    Tensor tx = 2.0 * x;
    Tensor shifted = add_row(tx, Tensor::matrix({{0.3, -0.4}}));
    Eigen::MatrixXd ye = to_eigen(y);
    Eigen::MatrixXd centered = ye.rowwise() - ye.colwise().mean();
    double var = (centered.array().square().colwise().sum() / 499.0).sum();
    double uvp = l2_uvp_samples(x, shifted, tx, y);
    CHECK(uvp == doctest::Approx(100 * 0.25 / var).epsilon(1e-6));
    CHECK(l2_uvp_samples(x, tx, tx, y) == 0.0);
}

TEST_CASE("l2_uvp on the 1-D Gaussian pair")
{
    AnalyticMap t = one_d_map();
    Distribution P = Distribution::gaussian(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 1);
    Distribution Q = Distribution::gaussian(Eigen::VectorXd::Constant(1, 2), 4 * Eigen::MatrixXd::Identity(1, 1), 2);
    MetricReport exact = l2_uvp(as_map(t), t, P, Q, 10000, 3);
    CHECK(exact.value == 0.0);
    CHECK(exact.n_samples == 10000);
    auto off = [&](const Tensor& x) { return add_row(t.apply(x), Tensor::matrix({{0.2}})); };
    // 100 * 0.04 / 4 = 1, up to the sampling error of Var(Q).
    CHECK(l2_uvp(off, t, P, Q, 10000, 3).value == doctest::Approx(1.0).epsilon(0.05));
    CHECK_THROWS(l2_uvp(as_map(t), t, P, Q, 100, 3));
}

TEST_CASE("mmd2 hand example with a unit RBF kernel")
{
    Kernel k = Kernel::rbf(1.0);
    Tensor x = Tensor::matrix({{0}, {1}}), y = Tensor::matrix({{2}, {3}});
    const double e = std::exp(1.0);
    // U-statistic: k(x1,x2) + k(y1,y2) - 2 mean_ij k(x_i, y_j).
    double kxx = 1 / std::sqrt(e), kyy = 1 / std::sqrt(e);
    double kxy = (std::exp(-2.0) + std::exp(-4.5) + std::exp(-0.5) + std::exp(-2.0)) / 4;
    CHECK(mmd2(x, y, k) == doctest::Approx(kxx + kyy - 2 * kxy).epsilon(1e-12));
    double vxx = (2 + 2 * kxx) / 4;
    CHECK(mmd2_biased(x, y, k) == doctest::Approx(2 * vxx - 2 * kxy).epsilon(1e-12));
    CHECK(mmd2_biased(x, x, k) == 0.0);
    CHECK_THROWS(mmd2(x.row(0), y, k));
    CHECK_THROWS(Kernel::rbf(0.0));
}

TEST_CASE("mmd2 separates shifted samples and is near zero for equal laws")
{
    Distribution a = Distribution::gaussian(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), 1);
    Distribution b = a.with_stream(2);
    Distribution c = Distribution::gaussian(Eigen::Vector2d(1, 0), Eigen::Matrix2d::Identity(), 3);
    Tensor xa = a.sample(1000), xb = b.sample(1000), xc = c.sample(1000);
    Kernel k = Kernel::median_heuristic(xa, xb);
    CHECK(std::fabs(mmd2(xa, xb, k)) < 0.005);
    CHECK(mmd2(xa, xc, k) > 0.05);
}

TEST_CASE("median heuristic on a small pooled set")
{
    // Pooled points 0, 1, 3, 7: pairwise distances 1, 3, 7, 2, 6, 4 -> median 3.5.
    Kernel k = Kernel::median_heuristic(Tensor::matrix({{0}, {1}}), Tensor::matrix({{3}, {7}}));
    CHECK(k.bandwidth() == doctest::Approx(3.5));
    CHECK_THROWS_AS(Kernel::median_heuristic(Tensor::zeros(3, 1), Tensor::zeros(3, 1)), DomainError);
}

TEST_CASE("transport cost estimate")
{
    Distribution P = Distribution::gaussian(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), 1);
    auto identity = [](const Tensor& x) { return x; };
    auto shift = [](const Tensor& x) { return add_row(x, Tensor::matrix({{3, 4}})); };
    CHECK(transport_cost_estimate(identity, P, CostFn::quadratic(), 10000, 1).value == 0.0);
    CHECK(transport_cost_estimate(shift, P, CostFn::quadratic(), 10000, 1).value == doctest::Approx(25));
    // Gaussian pair: closed-form map attains the Bures-Wasserstein value.
    AnalyticMap t = one_d_map();
    Distribution P1 = Distribution::gaussian(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 2);
    double bw = 5.0;
    CHECK(transport_cost_estimate(as_map(t), P1, CostFn::quadratic(), 100000, 4).value == doctest::Approx(bw).epsilon(0.02));
}

TEST_CASE("palette variance: constants give zero, white noise gives one")
{
    Tensor constant(Shape{2000, 5}, 3.0);
    MetricReport z = palette_variance(constant, 1);
    CHECK(z.value == 0.0);
    CHECK(z.spread == 0.0);
    Distribution g = Distribution::gaussian(Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4), 2);
    MetricReport one = palette_variance(g.sample(5000), 3);
    CHECK(one.value == doctest::Approx(1.0).epsilon(0.05));
    CHECK(one.spread > 0);
    CHECK(one.spread < 0.05);
    CHECK_THROWS(palette_variance(Tensor::zeros(10, 2), 1));
}

TEST_CASE("log grid endpoints and ratios")
{
    std::vector<double> g = log_grid(1e-3, 1e-1, 5);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == doctest::Approx(1e-3));
    CHECK(g.back() == doctest::Approx(1e-1));
    CHECK(g[1] / g[0] == doctest::Approx(g[4] / g[3]));
}

TEST_CASE("two-atom first variation: KL second order with its Taylor constant")
{
    Tensor support = Tensor::matrix({{0}, {1}});
    const double d = 0.25;
    FvSlope s = fv_slope(Discrepancy::kl, support, {0.5, 0.5}, {0.5 + d, 0.5 - d}, log_grid(1e-3, 1e-1, 9));
    CHECK(s.slope == doctest::Approx(2.0).epsilon(0.01));
    // KL(q + e, q) ~ sum (e_i)^2 / (2 q_i) = 2 (eps d)^2 at q = 1/2.
    for (std::size_t i = 0; i < s.eps.size(); ++i) {
        double e = s.eps[i] * d;
        CHECK(s.values[i] == doctest::Approx(2 * e * e).epsilon(0.01));
    }
}

TEST_CASE("first variation slopes on random instances")
{
    std::vector<double> grid = log_grid(1e-3, 1e-1, 9);
    for (int seed = 0; seed < 5; ++seed) {
        Rng r = make_rng(seed, "fv");
        Tensor support = gradcheck::uniform(r, {8, 2}, -1, 1);
        std::vector<double> q(8), p(8);
        double sq = 0, sp = 0;
        for (int i = 0; i < 8; ++i) {
            q[i] = 0.5 + (i % 3) * 0.3 + 0.01 * seed;
            p[i] = 1.5 - (i % 4) * 0.2;
            sq += q[i];
            sp += p[i];
        }
        for (int i = 0; i < 8; ++i)
            q[i] /= sq, p[i] /= sp;
        CHECK(fv_slope(Discrepancy::kl, support, q, p, grid).slope >= 1.9);
        CHECK(fv_slope(Discrepancy::mmd2, support, q, p, grid).slope == doctest::Approx(2.0).epsilon(1e-6));
        // Moving eps mass costs order eps in W2^2.
        CHECK(fv_slope(Discrepancy::w2, support, q, p, grid).slope == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("discrete discrepancies: exact values and errors")
{
    Tensor support = Tensor::matrix({{0}, {2}});
    Kernel k = Kernel::rbf(1.0);
    CHECK(discrete_discrepancy(Discrepancy::kl, support, {0.5, 0.5}, {0.5, 0.5}, k) == 0.0);
    CHECK(discrete_discrepancy(Discrepancy::kl, support, {0.75, 0.25}, {0.5, 0.5}, k) ==
          doctest::Approx(0.75 * std::log(1.5) + 0.25 * std::log(0.5)));
    CHECK_THROWS_AS(discrete_discrepancy(Discrepancy::kl, support, {0.5, 0.5}, {1.0, 0.0}, k), DomainError);
    // Moving 0.25 mass a distance of 2.
    CHECK(discrete_discrepancy(Discrepancy::w2, support, {0.75, 0.25}, {0.5, 0.5}, k) == doctest::Approx(1.0));
    double delta_k = 2 * (1 - std::exp(-2.0));
    CHECK(discrete_discrepancy(Discrepancy::mmd2, support, {0.75, 0.25}, {0.5, 0.5}, k) ==
          doctest::Approx(0.0625 * delta_k));
}

TEST_CASE("fv_slope argument checks")
{
    Tensor support = Tensor::matrix({{0}, {1}});
    CHECK_THROWS(fv_slope(Discrepancy::kl, support, {0.5, 0.5}, {0.6, 0.4}, {0.01, 0.02}));
    CHECK_THROWS(fv_slope(Discrepancy::kl, support, {0.5, 0.5}, {0.6, 0.4}, log_grid(1e-3, 0.5, 9)));
    CHECK_THROWS(fv_slope(Discrepancy::kl, Tensor::zeros(65, 1), std::vector<double>(65, 1.0 / 65),
                          std::vector<double>(65, 1.0 / 65), log_grid(1e-3, 1e-1, 9)));
    // P == Q: every D is exactly zero, nothing left to fit.
    CHECK_THROWS_AS(fv_slope(Discrepancy::kl, support, {0.5, 0.5}, {0.5, 0.5}, log_grid(1e-3, 1e-1, 9)),
                    NumericError);
}
