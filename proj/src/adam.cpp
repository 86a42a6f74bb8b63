#include "otlab/adam.hpp"

#include <cmath>

#include "otlab/errors.hpp"

namespace otlab {

Adam::Adam(std::vector<Parameter*> params, AdamOptions options) : params_(std::move(params))
{
    state_.options = options;
    for (auto* p : params_) {
        state_.m.emplace_back(p->value.shape());
        state_.v.emplace_back(p->value.shape());
    }
}

void Adam::step()
{
    adam_step(state_, params_);
    zero_grad();
}

void Adam::zero_grad()
{
    for (auto* p : params_)
        p->zero_grad();
}

void adam_step(AdamState& state, const std::vector<Parameter*>& params)
{
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw DimensionError("adam state does not match the parameter list");
    for (std::size_t k = 0; k < params.size(); ++k) {
        const Parameter& p = *params[k];
        if (p.grad.shape() != p.value.shape() || state.m[k].shape() != p.value.shape())
            throw DimensionError("adam: shape mismatch for parameter " + p.name);
        if (!p.grad.all_finite())
            throw NumericError("adam: non-finite gradient for parameter " + p.name);
    }
    const auto& o = state.options;
    ++state.step_count;
    double t = static_cast<double>(state.step_count);
    double c1 = 1.0 - std::pow(o.beta1, t);
    double c2 = 1.0 - std::pow(o.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k];
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            double g = p.grad[i];
            m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g;
            v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
            double mhat = m[i] / c1;
            double vhat = v[i] / c2;
            p.value[i] -= o.lr * mhat / (std::sqrt(vhat) + o.eps);
        }
        p.value.require_finite("adam update of " + p.name);
    }
}

}  // namespace otlab
