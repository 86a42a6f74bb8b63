#pragma once

#include <cstddef>

#include "otlab/autodiff.hpp"
#include "otlab/tensor.hpp"

namespace otlab {

/// 1-D upsampling of row signals by an integer factor.
///
/// Linear mode uses corner-aligned interpolation: output sample j of N = n*factor
/// sits at input coordinate j*(n-1)/(N-1), so both endpoints are reproduced and
/// affine sequences are interpolated exactly. Out-of-range neighbours are clamped
/// to the nearest endpoint (replication).
class Upsampler {
public:
    enum class Kind { linear, nearest };

    Upsampler() = default;
    Upsampler(Kind kind, std::size_t factor);

    Kind kind() const { return kind_; }
    std::size_t factor() const { return factor_; }

    /// Interpolation matrix U with Up(x) = x U, shape n x (n * factor).
    Tensor matrix(std::size_t n) const;
    Tensor apply(const Tensor& x) const;

    bool operator==(const Upsampler&) const = default;

private:
    Kind kind_ = Kind::linear;
    std::size_t factor_ = 1;
};

}  // namespace otlab
