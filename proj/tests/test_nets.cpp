#include <doctest.h>

#include <sstream>

#include "gradcheck.hpp"
#include "otlab/errors.hpp"
#include "otlab/nets.hpp"
#include "otlab/upsample.hpp"

using namespace otlab;

TEST_CASE("mlp shapes and parameter count")
{
    Mlp net({3, 16, 16, 2}, 0.2, 1);
    CHECK(net.layers().size() == 3);
    CHECK(net.parameter_count() == 3 * 16 + 16 + 16 * 16 + 16 + 16 * 2 + 2);
    CHECK(net.apply(Tensor::zeros(5, 3)).shape() == Shape{5, 2});
    CHECK_THROWS_AS(net.apply(Tensor::zeros(5, 4)), DimensionError);
}

TEST_CASE("same seed, same weights; different seed, different weights")
{
    Mlp a({2, 8, 1}, 0.2, 9), b({2, 8, 1}, 0.2, 9), c({2, 8, 1}, 0.2, 10);
    CHECK(a.layers()[0].weight.value == b.layers()[0].weight.value);
    CHECK_FALSE(a.layers()[0].weight.value == c.layers()[0].weight.value);
}

TEST_CASE("glorot uniform bound and zero biases")
{
    Mlp net({10, 30, 1}, 0.2, 3);
    const double bound = std::sqrt(6.0 / 40.0);
    for (double w : net.layers()[0].weight.value.data())
        CHECK(std::fabs(w) <= bound);
    for (double b : net.layers()[0].bias.value.data())
        CHECK(b == 0.0);
}

TEST_CASE("tape forward equals inference")
{
    Mlp net({3, 8, 8, 3}, 0.2, 2, MapHead::identity());
    Rng r = make_rng(2, "x");
    Tensor x = gradcheck::uniform(r, {4, 3}, -1, 1);
    Tape tape;
    CHECK(net.forward(tape, tape.constant(x)).value() == net.apply(x));
    CHECK(net.forward_frozen(tape, tape.constant(x)).value() == net.apply(x));
}

TEST_CASE("zeroed output layer makes residual heads exact")
{
    Mlp id({2, 8, 2}, 0.2, 1, MapHead::identity());
    id.zero_output_layer();
    Tensor x = Tensor::matrix({{1, 2}, {-3, 4}});
    CHECK(id.apply(x) == x);

    Upsampler up(Upsampler::Kind::linear, 2);
    Mlp us({3, 8, 6}, 0.2, 1, MapHead::upsample(up));
    us.zero_output_layer();
    Tensor s = Tensor::matrix({{1, 2, 3}});
    CHECK(us.apply(s) == up.apply(s));
}

TEST_CASE("checkpoint round trip is bit exact")
{
    Upsampler up(Upsampler::Kind::nearest, 2);
    Mlp net({4, 8, 8}, 0.1, 77, MapHead::upsample(up));
    std::stringstream ss;
    save_checkpoint(net, ss);
    Mlp back = load_checkpoint(ss);
    CHECK(back.dims() == net.dims());
    CHECK(back.leaky_slope() == net.leaky_slope());
    CHECK(back.init_seed() == 77);
    CHECK(back.head().kind == MapHead::Kind::upsample);
    Rng r = make_rng(1, "x");
    Tensor x = gradcheck::uniform(r, {3, 4}, -1, 1);
    CHECK(back.apply(x) == net.apply(x));
}

TEST_CASE("bad checkpoint is rejected")
{
    std::stringstream ss("not a checkpoint\n");
    CHECK_THROWS(load_checkpoint(ss));
}

TEST_CASE("frozen map is a snapshot")
{
    Mlp net({2, 4, 2}, 0.2, 1);
    FrozenMap frozen(net);
    Tensor x = Tensor::matrix({{0.5, -0.5}});
    Tensor before = net.apply(x);
    net.layers()[0].weight.value[0] += 1.0;
    CHECK(frozen.apply(x) == before);
    CHECK(FrozenMap::identity(3).apply(Tensor::matrix({{1, 2, 3}})) == Tensor::matrix({{1, 2, 3}}));
}

TEST_CASE("linear upsampler reproduces endpoints and affine signals")
{
    Upsampler up(Upsampler::Kind::linear, 4);
    Tensor x = Tensor::matrix({{1, 3, 5, 7}});
    Tensor y = up.apply(x);
    REQUIRE(y.cols() == 16);
    CHECK(y.at(0, 0) == doctest::Approx(1));
    CHECK(y.at(0, 15) == doctest::Approx(7));
    // Affine input: output j sits at input coordinate j * 3 / 15.
    for (std::size_t j = 0; j < 16; ++j)
        CHECK(y.at(0, j) == doctest::Approx(1 + 2 * (3.0 * j / 15.0)));
}

TEST_CASE("nearest upsampler repeats samples")
{
    Upsampler up(Upsampler::Kind::nearest, 3);
    Tensor y = up.apply(Tensor::matrix({{1, 2}}));
    CHECK(y == Tensor::matrix({{1, 1, 1, 2, 2, 2}}));
}

TEST_CASE("upsampler matrix agrees with apply")
{
    Upsampler up(Upsampler::Kind::linear, 2);
    Tensor x = Tensor::matrix({{0.3, -1, 2, 4, 0}});
    CHECK(matmul(x, up.matrix(5)) == up.apply(x));
}
