#pragma once

// Feed-forward networks used as potentials f: Y -> R and transport maps T: X -> Y.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "otlab/autodiff.hpp"
#include "otlab/upsample.hpp"

namespace otlab {

/// Optional skip connection added to the network output.
/// identity: T(x) = x + MLP(x); upsample: T(x) = Up(x) + MLP(x).
struct MapHead {
    enum class Kind { none, identity, upsample };
    Kind kind = Kind::none;
    Upsampler up;

    static MapHead none() { return {}; }
    static MapHead identity() { return {Kind::identity, {}}; }
    static MapHead upsample(Upsampler u) { return {Kind::upsample, u}; }
    bool operator==(const MapHead&) const = default;
};

struct DenseLayer {
    Parameter weight;  // in x out
    Parameter bias;    // 1 x out
};

/// Affine layers with leaky-ReLU on hidden layers and a linear output.
class Mlp {
public:
    /// Glorot-uniform weights drawn from `init_seed`, zero biases.
    Mlp(std::vector<std::size_t> dims, double leaky_slope = 0.2, std::uint64_t init_seed = 0,
        MapHead head = {});

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t input_dim() const { return dims_.front(); }
    std::size_t output_dim() const { return dims_.back(); }
    double leaky_slope() const { return slope_; }
    std::uint64_t init_seed() const { return seed_; }
    const MapHead& head() const { return head_; }

    std::size_t parameter_count() const;
    std::vector<Parameter*> parameters();
    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    /// Inference without a tape.
    Tensor apply(const Tensor& x) const;
    /// Forward pass with parameters recorded as tracked leaves.
    Var forward(Tape& tape, const Var& x);
    /// Forward pass with parameters recorded as constants (gradient flows to x only).
    Var forward_frozen(Tape& tape, const Var& x) const;

    /// Per-row input gradient d net(x_i) / d x_i of a scalar-output network, built
    /// on the tape as a function of the parameters so it can itself be differentiated.
    /// Exact for piecewise-linear activations.
    Var input_gradient(Tape& tape, const Tensor& x);

    /// Zero the final layer, making residual maps exactly their skip term.
    void zero_output_layer();
    void zero_grad();

private:
    template <bool Tracked>
    Var forward_impl(Tape& tape, const Var& x);

    std::vector<std::size_t> dims_;
    double slope_;
    std::uint64_t seed_;
    MapHead head_;
    std::vector<DenseLayer> layers_;
};

Mlp mlp_new(std::vector<std::size_t> dims, double leaky_slope, std::uint64_t init_seed, MapHead head = {});

/// Inference-only deep copy of a network.
class FrozenMap {
public:
    FrozenMap() = default;
    explicit FrozenMap(const Mlp& net) : net_(std::make_shared<const Mlp>(net)) {}

    /// Exactly x -> Up(x): zero network plus upsample skip.
    static FrozenMap from_upsampler(std::size_t input_dim, Upsampler up);
    /// Exactly x -> x.
    static FrozenMap identity(std::size_t dim);

    bool empty() const { return !net_; }
    const Mlp& net() const { return *net_; }
    std::size_t input_dim() const { return net_->input_dim(); }
    std::size_t output_dim() const { return net_->output_dim(); }

    Tensor apply(const Tensor& x) const { return net_->apply(x); }
    Var forward(Tape& tape, const Var& x) const { return net_->forward_frozen(tape, x); }

private:
    std::shared_ptr<const Mlp> net_;
};

inline FrozenMap freeze(const Mlp& net) { return FrozenMap(net); }

/// Checkpoint: one line of JSON header (dims, activation, seed, head) followed by the
/// weights as little-endian f64, layer by layer (weight row-major, then bias).
void save_checkpoint(const Mlp& net, std::ostream& out);
Mlp load_checkpoint(std::istream& in);

}  // namespace otlab
