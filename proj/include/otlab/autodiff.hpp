#pragma once

// Reverse-mode automatic differentiation over Tensor values.
//
// A Tape records primitive operations in execution order. Leaves are either
// constants (data), variables (gradient reported by backward) or parameters
// (gradient accumulated into Parameter::grad). Every recorded value is checked
// for NaN/Inf at creation time.

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "otlab/tensor.hpp"

namespace otlab {

/// A named trainable tensor together with its gradient accumulator.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad = Tensor(value.shape()); }
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    bool tracked() const;
    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Gradients of tape variables, keyed by the variable that produced them.
class Gradients {
public:
    /// Gradient w.r.t. a variable leaf; zeros if the root did not depend on it.
    const Tensor& of(const Var& v) const;
    bool contains(const Var& v) const { return grads_.count(v.id()) != 0; }

private:
    friend class Tape;
    std::unordered_map<std::size_t, Tensor> grads_;
    std::unordered_map<std::size_t, Tensor> zeros_;
};

class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() { nodes_.reserve(64); }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var variable(Tensor value);
    Var parameter(Parameter& p);

    /// Propagates d(root)/d(node) for every tracked node, accumulates parameter
    /// gradients, returns variable gradients and clears the tape.
    Gradients backward(const Var& root);

    void clear();
    std::size_t size() const { return nodes_.size(); }

    // Primitive plumbing used by the op implementations.
    Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn);
    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool tracked(std::size_t id) const { return nodes_[id].tracked; }
    /// Adds `g` into the gradient accumulator of node `id` if it is tracked.
    void accumulate(std::size_t id, const Tensor& g);
    /// Same as accumulate but adds `scale * g`.
    void accumulate_scaled(std::size_t id, const Tensor& g, double scale);
    const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
    const std::vector<std::size_t>& parents(std::size_t id) const { return nodes_[id].parents; }

private:
    enum class LeafKind { none, variable, parameter };

    struct Node {
        Tensor value;
        Tensor grad;
        bool has_grad = false;
        bool tracked = false;
        LeafKind leaf = LeafKind::none;
        Parameter* param = nullptr;
        std::vector<std::size_t> parents;
        BackwardFn backward;
    };

    Tensor& grad_slot(std::size_t id);
    std::vector<Node> nodes_;
};

// Elementwise ops accept equal shapes or a single-element operand (scalar broadcast).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var shift(const Var& a, double c);
Var square(const Var& a);
Var abs(const Var& a);
/// |a|^p, with derivative p|a|^(p-1)sign(a) and 0 at a == 0.
Var abs_pow(const Var& a, double p);
Var sqrt(const Var& a);
Var leaky_relu(const Var& a, double alpha = 0.2);
Var sum(const Var& a);
Var mean(const Var& a);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
/// Rank-2 a plus a 1 x cols row added to every row (explicit batch bias).
Var add_row(const Var& a, const Var& row);
/// Sum over columns of a rank-2 tensor: [B x n] -> [B].
Var row_sum(const Var& a);
Var reshape(const Var& a, Shape shape);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

}  // namespace otlab
