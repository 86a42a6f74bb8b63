#include <doctest.h>

#include <Eigen/Dense>

#include "otlab/distributions.hpp"
#include "otlab/errors.hpp"

using namespace otlab;

namespace {

Eigen::VectorXd sample_mean(const Tensor& s) { return to_eigen(s).colwise().mean().transpose(); }

Eigen::MatrixXd sample_cov(const Tensor& s)
{
    Eigen::MatrixXd m = to_eigen(s);
    Eigen::MatrixXd c = m.rowwise() - m.colwise().mean();
    return c.transpose() * c / static_cast<double>(m.rows() - 1);
}

}  // namespace

TEST_CASE("gaussian samples match mean and covariance")
{
    Eigen::Vector2d mean(2, -1);
    Eigen::Matrix2d cov;
    cov << 2, -0.6, -0.6, 1;
    Distribution g = Distribution::gaussian(mean, cov, 3);
    Tensor s = g.sample(200000);
    // Standard errors at this n are about 0.003 for the mean and 0.006 for the covariance.
    CHECK((sample_mean(s) - mean).norm() < 0.02);
    CHECK((sample_cov(s) - cov).norm() < 0.03);
}

TEST_CASE("non-SPD covariance is rejected")
{
    Eigen::Matrix2d bad;
    bad << 1, 2, 2, 1;
    CHECK_THROWS_AS(Distribution::gaussian(Eigen::Vector2d::Zero(), bad, 0), DomainError);
}

TEST_CASE("same seed, same stream; with_stream gives a fresh one")
{
    Distribution a = Distribution::gaussian(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 5);
    Distribution b = a;
    Distribution c = a.with_stream(6);
    Tensor sa = a.sample(10), sb = b.sample(10), sc = c.sample(10);
    CHECK(sa == sb);
    CHECK_FALSE(sa == sc);
    CHECK(c.with_stream(6).sample(10) == Distribution(c.with_stream(6)).sample(10));
}

TEST_CASE("discrete atoms follow their weights")
{
    Tensor pts = Tensor::matrix({{0}, {2}});
    Distribution d = Distribution::discrete_atoms(pts, {0.25, 0.75}, 1);
    Tensor s = d.sample(40000);
    double twos = 0;
    for (double v : s.data()) {
        CHECK((v == 0 || v == 2));
        twos += v == 2;
    }
    CHECK(twos / 40000 == doctest::Approx(0.75).epsilon(0.02));
    CHECK_THROWS(Distribution::discrete_atoms(pts, {0.5}, 1));
}

TEST_CASE("mixture mean is the weighted component mean")
{
    std::vector<Distribution> comps{
        Distribution::gaussian(Eigen::VectorXd::Constant(1, -3), Eigen::MatrixXd::Identity(1, 1), 1),
        Distribution::gaussian(Eigen::VectorXd::Constant(1, 5), Eigen::MatrixXd::Identity(1, 1), 2)};
    Distribution m = Distribution::mixture({0.5, 0.5}, comps, 3);
    CHECK(sample_mean(m.sample(100000))(0) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("box degradation averages then subsamples (circular)")
{
    Degradation d = Degradation::box(2, 2);
    CHECK(d.output_dim(8) == 4);
    Tensor hr = Tensor::matrix({{1, 3, 5, 7, 0, 2, 4, 6}});
    Tensor lr = d.apply(hr);
    CHECK(lr == Tensor::matrix({{2, 6, 1, 5}}));
    // Last window covers samples 6, 7, 0, 1.
    Degradation wrap = Degradation::box(4, 2);
    CHECK(wrap.apply(Tensor::matrix({{1, 1, 0, 0, 0, 0, 5, 5}})).at(0, 3) == doctest::Approx(3));
}

TEST_CASE("smoothing kernel gives unit marginal variance")
{
    std::vector<double> k = smoothing_kernel(32, 2.0);
    double ss = 0;
    for (double v : k)
        ss += v * v;
    CHECK(ss == doctest::Approx(1.0));
}

TEST_CASE("sr pair dimensions and blur shrinks variance")
{
    SrPair pair = make_sr_pair(32, Degradation::box(4, 4), 9, 2.0);
    CHECK(pair.hr.dim() == 32);
    CHECK(pair.lr.dim() == 8);
    Tensor hr = pair.hr.sample(20000), lr = pair.lr.sample(20000);
    CHECK(sample_cov(hr).diagonal().mean() == doctest::Approx(1.0).epsilon(0.03));
    CHECK(sample_cov(lr).diagonal().mean() < 0.95);
}
