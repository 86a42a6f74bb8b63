#include "otlab/upsample.hpp"

#include <algorithm>
#include <cmath>

#include "otlab/errors.hpp"

namespace otlab {

Upsampler::Upsampler(Kind kind, std::size_t factor) : kind_(kind), factor_(factor)
{
    if (factor == 0)
        throw ConfigError("upsampling factor must be >= 1");
}

Tensor Upsampler::matrix(std::size_t n) const
{
    std::size_t big = n * factor_;
    Tensor u({n, big});
    for (std::size_t j = 0; j < big; ++j) {
        if (kind_ == Kind::nearest) {
            u.at(j / factor_, j) = 1.0;
            continue;
        }
        if (n == 1 || big == 1) {
            u.at(0, j) = 1.0;
            continue;
        }
        double pos = static_cast<double>(j) * static_cast<double>(n - 1) / static_cast<double>(big - 1);
        auto lo = static_cast<std::size_t>(std::floor(pos));
        lo = std::min(lo, n - 1);
        std::size_t hi = std::min(lo + 1, n - 1);
        double w = pos - static_cast<double>(lo);
        u.at(lo, j) += 1.0 - w;
        u.at(hi, j) += w;
    }
    return u;
}

Tensor Upsampler::apply(const Tensor& x) const { return matmul(x, matrix(x.cols())); }

}  // namespace otlab
