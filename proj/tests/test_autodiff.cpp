#include <doctest.h>

#include <map>
#include <string>

#include "gradcheck.hpp"
#include "otlab/costs.hpp"
#include "otlab/errors.hpp"
#include "otlab/nets.hpp"

using namespace otlab;
using gradcheck::away_from_zero;
using gradcheck::uniform;

namespace {

constexpr int n_seeds = 100;
constexpr double tolerance = 1e-4;

// sum(out * W) for a fixed random W, so every output entry contributes a distinct weight.
Var contract(Tape& tape, const Var& out, Rng& rng)
{
    Tensor w = uniform(rng, out.shape(), -1.0, 1.0);
    return sum(mul(out, tape.constant(w)));
}

struct Case {
    std::function<std::vector<Tensor>(Rng&)> inputs;
    std::function<Var(Tape&, const std::vector<Var>&)> op;
};

std::map<std::string, Case> primitive_cases()
{
    const Shape s{3, 4};
    auto two = [s](Rng& r) { return std::vector<Tensor>{away_from_zero(r, s), away_from_zero(r, s)}; };
    auto one = [s](Rng& r) { return std::vector<Tensor>{away_from_zero(r, s)}; };
    std::map<std::string, Case> c;
    c["add"] = {two, [](Tape&, const std::vector<Var>& v) { return add(v[0], v[1]); }};
    c["sub"] = {two, [](Tape&, const std::vector<Var>& v) { return sub(v[0], v[1]); }};
    c["mul"] = {two, [](Tape&, const std::vector<Var>& v) { return mul(v[0], v[1]); }};
    c["mul_scalar_broadcast"] = {[s](Rng& r) { return std::vector<Tensor>{away_from_zero(r, s), away_from_zero(r, {1})}; },
                                 [](Tape&, const std::vector<Var>& v) { return mul(v[0], v[1]); }};
    c["scale"] = {one, [](Tape&, const std::vector<Var>& v) { return scale(v[0], -1.7); }};
    c["shift"] = {one, [](Tape&, const std::vector<Var>& v) { return shift(v[0], 0.3); }};
    c["square"] = {one, [](Tape&, const std::vector<Var>& v) { return square(v[0]); }};
    c["abs"] = {one, [](Tape&, const std::vector<Var>& v) { return abs(v[0]); }};
    c["abs_pow"] = {one, [](Tape&, const std::vector<Var>& v) { return abs_pow(v[0], 1.5); }};
    c["sqrt"] = {[s](Rng& r) { return std::vector<Tensor>{uniform(r, s, 0.5, 2.0)}; },
                 [](Tape&, const std::vector<Var>& v) { return sqrt(v[0]); }};
    c["leaky_relu"] = {one, [](Tape&, const std::vector<Var>& v) { return leaky_relu(v[0], 0.2); }};
    c["sum"] = {one, [](Tape&, const std::vector<Var>& v) { return scale(sum(v[0]), 0.7); }};
    c["mean"] = {one, [](Tape&, const std::vector<Var>& v) { return square(mean(v[0])); }};
    c["matmul"] = {[](Rng& r) { return std::vector<Tensor>{away_from_zero(r, {3, 4}), away_from_zero(r, {4, 2})}; },
                   [](Tape&, const std::vector<Var>& v) { return matmul(v[0], v[1]); }};
    c["transpose"] = {one, [](Tape&, const std::vector<Var>& v) { return transpose(v[0]); }};
    c["add_row"] = {[s](Rng& r) { return std::vector<Tensor>{away_from_zero(r, s), away_from_zero(r, {1, 4})}; },
                    [](Tape&, const std::vector<Var>& v) { return add_row(v[0], v[1]); }};
    c["row_sum"] = {one, [](Tape&, const std::vector<Var>& v) { return row_sum(v[0]); }};
    c["reshape"] = {one, [](Tape&, const std::vector<Var>& v) { return reshape(v[0], {2, 6}); }};
    return c;
}

}  // namespace

TEST_CASE("gradient check: every primitive over 100 seeds")
{
    for (const auto& [name, cs] : primitive_cases()) {
        double worst = 0;
        for (int seed = 0; seed < n_seeds; ++seed) {
            Rng data = make_rng(seed, "gradcheck-" + name);
            std::vector<Tensor> in = cs.inputs(data);
            const std::uint64_t wseed = derive_seed(seed, "weights");
            auto loss = [&](Tape& tape, const std::vector<Var>& v) {
                Rng w(wseed);
                return contract(tape, cs.op(tape, v), w);
            };
            worst = std::max(worst, gradcheck::check_inputs(loss, in));
        }
        INFO(name << " worst relative error " << worst);
        CHECK(worst < tolerance);
    }
}

TEST_CASE("gradient check: composite expressions reuse nodes")
{
    for (int seed = 0; seed < n_seeds; ++seed) {
        Rng r = make_rng(seed, "composite");
        std::vector<Tensor> in{away_from_zero(r, {4, 3}), away_from_zero(r, {3, 3})};
        auto loss = [](Tape&, const std::vector<Var>& v) {
            Var h = leaky_relu(matmul(v[0], v[1]));
            return mean(square(h - v[0]) + abs(h));
        };
        CHECK(gradcheck::check_inputs(loss, in) < tolerance);
    }
}

TEST_CASE("gradient check: three-layer MLP losses over 100 seeds")
{
    double worst_plain = 0, worst_map = 0, worst_gp = 0;
    for (int seed = 0; seed < n_seeds; ++seed) {
        Rng r = make_rng(seed, "mlp-data");
        Tensor x = uniform(r, {6, 2}, -2, 2);
        Tensor y = uniform(r, {6, 2}, -2, 2);
        Mlp f({2, 8, 8, 1}, 0.2, derive_seed(seed, "f"));
        Mlp T({2, 8, 8, 2}, 0.2, derive_seed(seed, "T"), MapHead::identity());

        worst_plain = std::max(worst_plain, gradcheck::check_parameters(
                                                [&](Tape& tape) { return mean(square(f.forward(tape, tape.constant(x)))); },
                                                f.parameters()));

        // Map loss: mean c(x, T(x)) - mean f(T(x)) with f frozen.
        CostFn c = CostFn::quadratic();
        worst_map = std::max(worst_map, gradcheck::check_parameters(
                                            [&](Tape& tape) {
                                                Var tx = T.forward(tape, tape.constant(x));
                                                return mean(c.eval(tape, x, tx)) - mean(f.forward_frozen(tape, tx));
                                            },
                                            T.parameters()));

        // Gradient penalty: mean (|grad_x f| - 1)^2, differentiated through the input gradient.
        worst_gp = std::max(worst_gp, gradcheck::check_parameters(
                                          [&](Tape& tape) {
                                              Var g = f.input_gradient(tape, y);
                                              Var norm = sqrt(shift(row_sum(square(g)), 1e-12));
                                              return mean(square(shift(norm, -1.0)));
                                          },
                                          f.parameters()));
    }
    INFO("plain " << worst_plain << " map " << worst_map << " gp " << worst_gp);
    CHECK(worst_plain < tolerance);
    CHECK(worst_map < tolerance);
    CHECK(worst_gp < tolerance);
}

TEST_CASE("input gradient matches finite differences of the network")
{
    Mlp f({3, 16, 16, 1}, 0.2, 4);
    Rng r = make_rng(4, "x");
    Tensor x = uniform(r, {5, 3}, -1, 1);
    Tape tape;
    Tensor g = f.input_gradient(tape, x).value();
    const double h = 1e-6;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) {
            Tensor up = x, dn = x;
            up.at(i, j) += h;
            dn.at(i, j) -= h;
            double num = (f.apply(up).at(i, 0) - f.apply(dn).at(i, 0)) / (2 * h);
            CHECK(g.at(i, j) == doctest::Approx(num).epsilon(1e-6));
        }
}

TEST_CASE("gradients accumulate over shared parents")
{
    Tape tape;
    Var x = tape.variable(Tensor::vector({1.5, -2.0}));
    Var y = sum(x * x + x);
    Gradients g = tape.backward(y);
    CHECK(g.of(x)[0] == doctest::Approx(4.0));
    CHECK(g.of(x)[1] == doctest::Approx(-3.0));
}

TEST_CASE("unused variable gets a zero gradient")
{
    Tape tape;
    Var x = tape.variable(Tensor::vector({1.0, 2.0}));
    Var z = tape.variable(Tensor::vector({3.0}));
    Gradients g = tape.backward(sum(square(x)));
    CHECK(g.of(z)[0] == 0.0);
}

TEST_CASE("non-finite values are rejected when recorded")
{
    Tape tape;
    Var x = tape.variable(Tensor::vector({-1.0}));
    CHECK_THROWS_AS(sqrt(x), DomainError);
    Var big = tape.variable(Tensor::vector({1e200}));
    CHECK_THROWS_AS(square(big), NumericError);
}

TEST_CASE("backward needs a scalar root")
{
    Tape tape;
    Var x = tape.variable(Tensor::vector({1.0, 2.0}));
    CHECK_THROWS_AS(tape.backward(square(x)), ContractError);
}

TEST_CASE("shape mismatch is a dimension error")
{
    Tape tape;
    Var a = tape.variable(Tensor::zeros(2, 3));
    Var b = tape.variable(Tensor::zeros(3, 2));
    CHECK_THROWS_AS(add(a, b), DimensionError);
    CHECK_THROWS_AS(matmul(a, a), DimensionError);
}
