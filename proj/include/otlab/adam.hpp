#pragma once

#include <cstddef>
#include <vector>

#include "otlab/autodiff.hpp"

namespace otlab {

struct AdamOptions {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Moment buffers for one optimizer instance; m[i], v[i] shadow params[i].
struct AdamState {
    AdamOptions options;
    std::size_t step_count = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
};

/// Bias-corrected Adam over a fixed list of parameters.
class Adam {
public:
    Adam(std::vector<Parameter*> params, AdamOptions options = {});

    /// Applies one update from the accumulated Parameter::grad values, then zeroes them.
    void step();
    void zero_grad();

    const AdamState& state() const { return state_; }
    const std::vector<Parameter*>& params() const { return params_; }

private:
    std::vector<Parameter*> params_;
    AdamState state_;
};

/// One Adam update of `params` in place using their grad buffers.
void adam_step(AdamState& state, const std::vector<Parameter*>& params);

}  // namespace otlab
