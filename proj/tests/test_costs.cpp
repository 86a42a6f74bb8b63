#include <doctest.h>

#include "gradcheck.hpp"
#include "otlab/costs.hpp"
#include "otlab/errors.hpp"
#include "otlab/nets.hpp"
#include "otlab/upsample.hpp"

using namespace otlab;

TEST_CASE("basic costs on a hand example")
{
    Tensor x = Tensor::matrix({{0, 0}, {1, 1}});
    Tensor y = Tensor::matrix({{3, 4}, {1, -1}});
    CHECK(CostFn::quadratic().eval(x, y) == Tensor::vector({25, 4}));
    CHECK(CostFn::mse().eval(x, y) == Tensor::vector({12.5, 2}));
    CHECK(CostFn::mae().eval(x, y) == Tensor::vector({3.5, 1}));
    Tensor l3 = CostFn::lp(3).eval(x, y);
    CHECK(l3[0] == doctest::Approx(27 + 64));
}

TEST_CASE("tape evaluation equals plain evaluation")
{
    Rng r = make_rng(1, "c");
    Tensor x = gradcheck::uniform(r, {5, 3}, -1, 1), y = gradcheck::uniform(r, {5, 3}, -1, 1);
    for (const CostFn& c : {CostFn::quadratic(), CostFn::mse(), CostFn::mae(), CostFn::lp(1.5),
                            CostFn::feature(3, 3, 16, 4), scale_cost(CostFn::mse(), 2.5)}) {
        Tape tape;
        Tensor a = c.eval(tape, x, tape.constant(y)).value();
        Tensor b = c.eval(x, y);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
}

TEST_CASE("pairwise diagonal equals per-sample evaluation")
{
    Rng r = make_rng(2, "c");
    Tensor x = gradcheck::uniform(r, {6, 2}, -1, 1), y = gradcheck::uniform(r, {6, 2}, -1, 1);
    CostFn c = CostFn::feature(2, 3, 8, 1);
    Eigen::MatrixXd m = c.pairwise(x, y);
    Tensor d = c.eval(x, y);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(m(i, i) == doctest::Approx(d[i]).epsilon(1e-12));
    CHECK(m(1, 4) == doctest::Approx(c.eval(x.row(1), y.row(4))[0]).epsilon(1e-12));
}

TEST_CASE("scaled cost multiplies and rejects non-positive lambda")
{
    Tensor x = Tensor::matrix({{1}}), y = Tensor::matrix({{3}});
    CHECK(scale_cost(CostFn::quadratic(), 0.5).eval(x, y)[0] == 2.0);
    CHECK_THROWS_AS(scale_cost(CostFn::quadratic(), 0.0), ConfigError);
    CHECK_THROWS_AS(scale_cost(CostFn::quadratic(), -1.0), ConfigError);
}

TEST_CASE("composite cost compares the upsampled source")
{
    Upsampler up(Upsampler::Kind::nearest, 2);
    CostFn c = CostFn::composite_upsample(CostFn::quadratic(), up);
    Tensor x = Tensor::matrix({{1, 2}}), y = Tensor::matrix({{1, 1, 2, 3}});
    CHECK(c.eval(x, y)[0] == 1.0);
}

TEST_CASE("dynamic cost starts at the upsampler and refreshes to the current map")
{
    Upsampler up(Upsampler::Kind::linear, 2);
    CostFn base = CostFn::mse();
    CostFn dyn = CostFn::dynamic(base, FrozenMap::from_upsampler(3, up));
    Rng r = make_rng(3, "c");
    Tensor x = gradcheck::uniform(r, {4, 3}, -1, 1), y = gradcheck::uniform(r, {4, 6}, -1, 1);
    CHECK(dyn.eval(x, y) == CostFn::composite_upsample(base, up).eval(x, y));

    Mlp T({3, 8, 6}, 0.2, 5, MapHead::upsample(up));
    CostFn refreshed = refresh_dynamic(dyn, T);
    CHECK(refreshed.eval(x, y) == base.eval(T.apply(x), y));
    CHECK_THROWS_AS(refresh_dynamic(base, T), ContractError);
}

TEST_CASE("mae subgradient is zero at ties")
{
    Tape tape;
    Tensor x = Tensor::matrix({{1, 2}});
    Var y = tape.variable(Tensor::matrix({{1, 3}}));
    Gradients g = tape.backward(sum(CostFn::mae().eval(tape, x, y)));
    CHECK(g.of(y).at(0, 0) == 0.0);
    CHECK(g.of(y).at(0, 1) == 0.5);
}

TEST_CASE("cost gradients pass a finite-difference check")
{
    Rng r = make_rng(4, "c");
    Tensor x = gradcheck::uniform(r, {4, 3}, -1, 1);
    Tensor y = gradcheck::uniform(r, {4, 3}, -1, 1);
    for (const CostFn& c : {CostFn::quadratic(), CostFn::mse(), CostFn::lp(1.5), CostFn::feature(3, 3, 8, 2)}) {
        auto loss = [&](Tape& tape, const std::vector<Var>& v) { return mean(c.eval(tape, x, v[0])); };
        CHECK(gradcheck::check_inputs(loss, {y}) < 1e-4);
    }
}
