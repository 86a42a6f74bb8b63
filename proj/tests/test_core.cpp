#include <doctest.h>

#include <cmath>
#include <set>

#include "otlab/adam.hpp"
#include "otlab/errors.hpp"
#include "otlab/rng.hpp"
#include "otlab/tensor.hpp"

using namespace otlab;

TEST_CASE("tensor matmul and transpose")
{
    Tensor a = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
    Tensor b = Tensor::matrix({{1, 0}, {0, 1}, {1, 1}});
    Tensor c = matmul(a, b);
    CHECK(c == Tensor::matrix({{4, 5}, {10, 11}}));
    CHECK(transpose(a).at(2, 1) == 6);
    CHECK_THROWS_AS(matmul(a, a), DimensionError);
}

TEST_CASE("tensor row helpers")
{
    Tensor a = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
    CHECK(a.row(1) == Tensor::matrix({{3, 4}}));
    CHECK(a.rows_range(1, 3).rows() == 2);
    CHECK(add_row(a, Tensor::matrix({{10, 20}})).at(2, 1) == 26);
    Tensor parts[] = {a, a.row(0)};
    CHECK(vstack(parts).rows() == 4);
    CHECK(sum(a) == 21);
    CHECK(mean(a) == 3.5);
}

TEST_CASE("tensor eigen round trip")
{
    Tensor a = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
    CHECK(from_eigen(to_eigen(a)) == a);
}

TEST_CASE("require_finite names the offending value")
{
    Tensor a = Tensor::vector({1.0, std::nan("")});
    CHECK_FALSE(a.all_finite());
    CHECK_THROWS_WITH_AS(a.require_finite("probe"), doctest::Contains("probe"), NumericError);
}

TEST_CASE("derived seeds are stable and name-separated")
{
    CHECK(derive_seed(1, "P") == derive_seed(1, "P"));
    CHECK(derive_seed(1, "P") != derive_seed(1, "Q"));
    CHECK(derive_seed(1, "P") != derive_seed(2, "P"));
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i)
        seen.insert(derive_seed(7, "replicate", i));
    CHECK(seen.size() == 1000);
    Rng a = make_rng(5, "x"), b = make_rng(5, "x");
    for (int i = 0; i < 10; ++i)
        CHECK(a() == b());
}

TEST_CASE("adam matches the bias-corrected update written out by hand")
{
    Parameter p("w", Tensor::vector({1.0, -2.0}));
    AdamOptions opt{0.1, 0.9, 0.999, 1e-8};
    Adam adam({&p}, opt);
    const double g1[] = {0.5, -3.0}, g2[] = {-1.0, 2.0};
    double x[] = {1.0, -2.0}, m[] = {0, 0}, v[] = {0, 0};
    for (int t = 1; t <= 2; ++t) {
        const double* g = t == 1 ? g1 : g2;
        p.grad = Tensor::vector({g[0], g[1]});
        adam.step();
        for (int i = 0; i < 2; ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
            double mh = m[i] / (1 - std::pow(0.9, t));
            double vh = v[i] / (1 - std::pow(0.999, t));
            x[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
            CHECK(p.value[i] == doctest::Approx(x[i]).epsilon(1e-12));
        }
        CHECK(p.grad[0] == 0.0);
    }
    CHECK(adam.state().step_count == 2);
}

TEST_CASE("adam first step moves each coordinate by lr against its gradient sign")
{
    Parameter p("w", Tensor::vector({0.0, 0.0, 0.0}));
    Adam adam({&p}, {0.01});
    p.grad = Tensor::vector({3.0, -0.002, 50.0});
    adam.step();
    CHECK(p.value[0] == doctest::Approx(-0.01));
    CHECK(p.value[1] == doctest::Approx(0.01).epsilon(1e-4));
    CHECK(p.value[2] == doctest::Approx(-0.01));
}

TEST_CASE("adam minimises a quadratic")
{
    Parameter p("w", Tensor::vector({5.0, -3.0}));
    Adam adam({&p}, {0.05});
    for (int i = 0; i < 2000; ++i) {
        p.grad = Tensor::vector({2 * (p.value[0] - 1), 2 * (p.value[1] + 1)});
        adam.step();
    }
    CHECK(p.value[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(p.value[1] == doctest::Approx(-1.0).epsilon(1e-3));
}
