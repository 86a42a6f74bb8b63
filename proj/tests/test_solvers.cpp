#include <doctest.h>

#include <chrono>

#include <Eigen/Dense>

#include "otlab/errors.hpp"
#include "otlab/metrics.hpp"
#include "otlab/oracles.hpp"
#include "otlab/solvers.hpp"

using namespace otlab;

namespace {

// W2^2 between (d_t0 + d_t2)/2 and (d_1 + d_3)/2 over both pairings, plus lambda * mean |x - T(x)|.
double two_atom_objective(double lambda, double t0, double t2)
{
    double keep = 0.5 * ((t0 - 1) * (t0 - 1) + (t2 - 3) * (t2 - 3));
    double swap = 0.5 * ((t0 - 3) * (t0 - 3) + (t2 - 1) * (t2 - 1));
    return std::min(keep, swap) + lambda * 0.5 * (std::fabs(t0) + std::fabs(t2 - 2));
}

std::pair<double, double> grid_minimiser(double lambda)
{
    double best = 1e300, b0 = 0, b2 = 0;
    for (double step : {0.01, 0.0005}) {
        double c0 = b0, c2 = b2, span = step == 0.01 ? 3.0 : 0.02;
        if (step == 0.01)
            c0 = 1.5, c2 = 1.5;
        for (double t0 = c0 - span; t0 <= c0 + span; t0 += step)
            for (double t2 = c2 - span; t2 <= c2 + span; t2 += step) {
                double v = two_atom_objective(lambda, t0, t2);
                if (v < best)
                    best = v, b0 = t0, b2 = t2;
            }
    }
    return {b0, b2};
}

Distribution gaussian_1d(double m, double var, std::uint64_t seed)
{
    return Distribution::gaussian(Eigen::VectorXd::Constant(1, m), Eigen::MatrixXd::Constant(1, 1, var), seed);
}

Mlp residual_map(std::size_t d, std::size_t width, std::uint64_t seed)
{
    Mlp T({d, width, width, d}, 0.2, seed, MapHead::identity());
    T.zero_output_layer();
    return T;
}

}  // namespace

TEST_CASE("example-1 objective matches the independent two-atom formula")
{
    for (double l : {0.2, 1.0, 1.7})
        for (double t0 : {-1.0, 0.3, 2.5})
            for (double t2 : {0.0, 2.2, 3.4})
                CHECK(example1_objective(l, t0, t2) == doctest::Approx(two_atom_objective(l, t0, t2)));
}

TEST_CASE("solve_example1 agrees with the closed form and a grid-search oracle")
{
    auto start = std::chrono::steady_clock::now();
    for (double l : {0.2, 0.6, 1.0, 1.4, 1.8}) {
        auto [t0, t2] = solve_example1(l);
        auto [g0, g2] = grid_minimiser(l);
        auto [e0, e2] = example1_solution(l);
        CHECK(std::fabs(t0 - e0) < 1e-3);
        CHECK(std::fabs(t2 - e2) < 1e-3);
        CHECK(std::fabs(t0 - g0) < 2e-3);
        CHECK(std::fabs(t2 - g2) < 2e-3);
        CHECK(two_atom_objective(l, t0, t2) <= two_atom_objective(l, g0, g2) + 1e-9);
    }
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 5.0);
}

TEST_CASE("solve_example1 rejects lambda outside (0, 2) and reports non-convergence")
{
    CHECK_THROWS_AS(solve_example1(0.0), DomainError);
    CHECK_THROWS_AS(solve_example1(2.5), DomainError);
    try {
        solve_example1(1.0, {0.05, 1e-12, 3});
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.trajectory().size() == 4);
    }
}

TEST_CASE("discrete_w2 against the sorted 1-D coupling")
{
    Tensor xs = Tensor::matrix({{0}, {2}}), ys = Tensor::matrix({{1}, {3}});
    CHECK(discrete_w2(xs, {0.5, 0.5}, ys, {0.5, 0.5}) == doctest::Approx(1.0));
    // 0.75 at 0 and 0.25 at 2 against 0.5 at 1 and 0.5 at 3: 0.5*1 + 0.25*9 + 0.25*1.
    CHECK(discrete_w2(xs, {0.75, 0.25}, ys, {0.5, 0.5}) == doctest::Approx(3.0));
}

TEST_CASE("OTS config validation")
{
    Distribution P = gaussian_1d(0, 1, 1), Q = gaussian_1d(2, 4, 2);
    Mlp f({1, 8, 1}, 0.2, 1);
    OtsConfig cfg;
    cfg.k_T = 0;
    CHECK_THROWS_AS(train_ots(P, Q, f, residual_map(1, 8, 1), cfg), ConfigError);
    cfg = {};
    cfg.k_c = 10;
    CHECK_THROWS_AS(train_ots(P, Q, f, residual_map(1, 8, 1), cfg), ConfigError);
    cfg = {};
    CHECK_THROWS_AS(train_ots(P, Q, f, residual_map(2, 8, 1), cfg), DimensionError);
}

TEST_CASE("OTS keeps the identity between equal distributions")
{
    Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
    Distribution P = Distribution::gaussian(Eigen::Vector2d::Zero(), id, 3);
    Distribution Q = Distribution::gaussian(Eigen::Vector2d::Zero(), id, 4);
    OtsConfig cfg;
    cfg.lr_f = cfg.lr_T = 1e-3;
    cfg.total_f_iters = 2000;
    OtsResult r = train_ots(P, Q, Mlp({2, 32, 32, 1}, 0.2, 5), residual_map(2, 32, 6), cfg);
    AnalyticMap identity = gaussian_ot_map(Eigen::Vector2d::Zero(), id, Eigen::Vector2d::Zero(), id);
    CHECK(l2_uvp(as_map(r.T), identity, P, Q, 10000, 7).value < 1.0);
    CHECK(r.trace.ots.size() == 2000);
}

TEST_CASE("OTS recovers 2 + 2x between 1-D Gaussians")
{
    Distribution P = gaussian_1d(0, 1, 11), Q = gaussian_1d(2, 4, 12);
    OtsConfig cfg;
    cfg.lr_f = cfg.lr_T = 1e-3;
    cfg.total_f_iters = 2000;
    OtsResult r = train_ots(P, Q, Mlp({1, 64, 64, 1}, 0.2, 13), residual_map(1, 64, 14), cfg);
    AnalyticMap truth = gaussian_ot_map(P.mean(), P.covariance(), Q.mean(), Q.covariance());
    double uvp = l2_uvp(as_map(r.T), truth, P, Q, 10000, 15).value;
    INFO("uvp " << uvp);
    CHECK(uvp < 2.0);
}

TEST_CASE("OTS training is bit-reproducible")
{
    auto run = [] {
        Distribution P = gaussian_1d(0, 1, 21), Q = gaussian_1d(1, 2, 22);
        OtsConfig cfg;
        cfg.total_f_iters = 50;
        return train_ots(P, Q, Mlp({1, 16, 1}, 0.2, 1), residual_map(1, 16, 2), cfg);
    };
    OtsResult a = run(), b = run();
    CHECK(a.T.apply(Tensor::matrix({{0.3}, {-1.2}})) == b.T.apply(Tensor::matrix({{0.3}, {-1.2}})));
    CHECK(a.trace.ots.back().loss_f == b.trace.ots.back().loss_f);
}

TEST_CASE("OTS divergence aborts with the trace so far")
{
    Distribution P = gaussian_1d(0, 1, 31), Q = gaussian_1d(50, 1, 32);
    OtsConfig cfg;
    cfg.lr_f = cfg.lr_T = 10.0;
    cfg.total_f_iters = 500;
    cfg.divergence_limit = 1e4;
    try {
        train_ots(P, Q, Mlp({1, 16, 1}, 0.2, 1), residual_map(1, 16, 2), cfg);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK_FALSE(e.trace().ots.empty());
        CHECK(e.trace().ots.size() < 500);
    }
}

TEST_CASE("saddle value is the dual objective")
{
    // f = 0 and T = identity: the value is mean c(x, x) = 0.
    Mlp f({1, 4, 1}, 0.2, 1);
    f.zero_output_layer();
    Mlp T = residual_map(1, 4, 2);
    Distribution P = gaussian_1d(0, 1, 1), Q = gaussian_1d(3, 1, 2);
    CHECK(saddle_value(f, T, CostFn::quadratic(), P, Q, 1000) == 0.0);
}

TEST_CASE("GAN trains, traces every generator step and validates lambda")
{
    Distribution P = gaussian_1d(0, 1, 41), Q = gaussian_1d(2, 1, 42);
    GanConfig cfg;
    cfg.total_gen_iters = 20;
    cfg.disc_iters_per_gen = 2;
    GanResult r = train_gan(P, Q, residual_map(1, 16, 1), Mlp({1, 16, 1}, 0.2, 2), cfg, CostFn::mse());
    CHECK(r.trace.gan.size() == 20);
    CHECK(r.trace.gan.front().gp >= 0);
    cfg.lambda = -1;
    CHECK_THROWS_AS(train_gan(P, Q, residual_map(1, 16, 1), Mlp({1, 16, 1}, 0.2, 2), cfg, CostFn::mse()),
                    ConfigError);
}

TEST_CASE("exact-W2 regularised generator lands on the biased two-atom point")
{
    Distribution P = Distribution::discrete_atoms(Tensor::matrix({{0}, {2}}), {0.5, 0.5}, 1);
    Distribution Q = Distribution::discrete_atoms(Tensor::matrix({{1}, {3}}), {0.5, 0.5}, 2);
    ExactGanResult r = train_gan_exact_w2(P, Q, residual_map(1, 64, 3), {1.0, 1e-3, 3000}, CostFn::mae());
    Tensor t = r.T.apply(Tensor::matrix({{0}, {2}}));
    CHECK(std::fabs(t[0] - 0.5) < 0.05);
    CHECK(std::fabs(t[1] - 2.5) < 0.05);
    CHECK(r.objective.back() <= r.objective.front());
}

TEST_CASE("OTS map is unchanged by scaling the cost")
{
    std::vector<double> uvp;
    for (double lambda : {0.1, 10.0}) {
        Distribution P = gaussian_1d(0, 1, 51), Q = gaussian_1d(2, 4, 52);
        OtsConfig cfg;
        cfg.lr_f = cfg.lr_T = 1e-3;
        cfg.total_f_iters = 2000;
        cfg.cost = scale_cost(CostFn::quadratic(), lambda);
        OtsResult r = train_ots(P, Q, Mlp({1, 64, 64, 1}, 0.2, 53), residual_map(1, 64, 54), cfg);
        AnalyticMap truth = gaussian_ot_map(P.mean(), P.covariance(), Q.mean(), Q.covariance());
        uvp.push_back(l2_uvp(as_map(r.T), truth, P, Q, 10000, 55).value);
    }
    INFO("uvp at 0.1: " << uvp[0] << ", at 10: " << uvp[1]);
    CHECK(std::fabs(uvp[0] - uvp[1]) < 1.0);
}
