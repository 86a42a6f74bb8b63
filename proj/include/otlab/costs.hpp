#pragma once

// Transport / content costs c(x, y), evaluated per sample over a batch.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "otlab/autodiff.hpp"
#include "otlab/nets.hpp"
#include "otlab/upsample.hpp"

namespace otlab {

/// Immutable cost function. Copies share the same underlying definition.
class CostFn {
public:
    enum class Kind { quadratic, mse, mae, lp, composite_upsample, dynamic, scaled, feature };

    /// ||x - y||^2
    static CostFn quadratic();
    /// ||x - y||^2 / dim(Y)
    static CostFn mse();
    /// ||x - y||_1 / dim(Y); subgradient 0 at ties
    static CostFn mae();
    /// sum_i |x_i - y_i|^p
    static CostFn lp(double p);
    /// b(Up(x), y)
    static CostFn composite_upsample(CostFn base, Upsampler up);
    /// b(T'(x), y) with T' a frozen map that refresh_dynamic replaces.
    static CostFn dynamic(CostFn base, FrozenMap frozen);
    /// MSE + 1/3 MAE + 1/50 * sum_k MSE(phi_k(x), phi_k(y)) with phi_k fixed random
    /// feature networks on R^dim (stand-in for pretrained perceptual features).
    static CostFn feature(std::size_t dim, std::size_t n_extractors, std::size_t width, std::uint64_t seed);

    Kind kind() const;
    /// Wrapped cost for composite/dynamic/scaled kinds.
    CostFn base() const;
    const FrozenMap& frozen() const;
    const Upsampler& upsampler() const;
    double weight() const;
    double exponent() const;
    std::string describe() const;

    /// Per-sample costs [B]; x is data, gradient flows to y only.
    Var eval(Tape& tape, const Tensor& x, const Var& y) const;
    Tensor eval(const Tensor& x, const Tensor& y) const;

    /// Full n x m matrix C_ij = c(x_i, y_j).
    Eigen::MatrixXd pairwise(const Tensor& x, const Tensor& y) const;

private:
    struct Node;
    explicit CostFn(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    friend CostFn scale_cost(const CostFn& c, double lambda);
    friend CostFn refresh_dynamic(const CostFn& c, const Mlp& current_map);

    std::shared_ptr<const Node> node_;
};

/// lambda * c(x, y); lambda must be > 0.
CostFn scale_cost(const CostFn& c, double lambda);
/// New dynamic cost whose frozen map is a snapshot of `current_map`.
CostFn refresh_dynamic(const CostFn& c, const Mlp& current_map);

}  // namespace otlab
