#include "otlab/autodiff.hpp"

#include <cmath>
#include <type_traits>

#include "otlab/errors.hpp"

namespace otlab {

const Tensor& Var::value() const
{
    if (!tape_)
        throw ContractError("use of an empty Var");
    return tape_->value(id_);
}

bool Var::tracked() const { return tape_ && tape_->tracked(id_); }

const Tensor& Gradients::of(const Var& v) const
{
    auto it = grads_.find(v.id());
    if (it != grads_.end())
        return it->second;
    auto z = zeros_.find(v.id());
    if (z != zeros_.end())
        return z->second;
    throw ContractError("no gradient recorded for this variable");
}

Var Tape::constant(Tensor value) { return record(std::move(value), {}, {}); }

Var Tape::variable(Tensor value)
{
    value.require_finite("variable");
    nodes_.push_back(Node{std::move(value), {}, false, true, LeafKind::variable, nullptr, {}, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& p)
{
    if (!p.value.all_finite())
        throw NumericError("non-finite value in parameter " + p.name);
    nodes_.push_back(Node{p.value, {}, false, true, LeafKind::parameter, &p, {}, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn)
{
    value.require_finite("tape operation");
    bool tracked = false;
    for (auto p : parents)
        tracked = tracked || nodes_[p].tracked;
    Node node;
    node.value = std::move(value);
    node.tracked = tracked;
    node.parents = std::move(parents);
    if (tracked)
        node.backward = std::move(fn);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_slot(std::size_t id)
{
    static_assert(std::is_nothrow_move_constructible_v<Node>);
    Node& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Tensor(n.value.shape());
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& g)
{
    if (!nodes_[id].tracked)
        return;
    Tensor& slot = grad_slot(id);
    if (slot.size() != g.size())
        throw DimensionError("gradient shape " + shape_string(g.shape()) + " for value " +
                             shape_string(slot.shape()));
    for (std::size_t i = 0; i < slot.size(); ++i)
        slot[i] += g[i];
}

void Tape::accumulate_scaled(std::size_t id, const Tensor& g, double s)
{
    if (!nodes_[id].tracked)
        return;
    Tensor& slot = grad_slot(id);
    if (slot.size() != g.size())
        throw DimensionError("gradient shape mismatch");
    for (std::size_t i = 0; i < slot.size(); ++i)
        slot[i] += s * g[i];
}

Gradients Tape::backward(const Var& root)
{
    if (root.tape() != this)
        throw ContractError("backward root is not on this tape");
    if (!nodes_[root.id()].value.is_scalar())
        throw ContractError("backward root must be a scalar, got shape " +
                            shape_string(nodes_[root.id()].value.shape()));
    Gradients out;
    if (nodes_[root.id()].tracked) {
        grad_slot(root.id())[0] = 1.0;
        for (std::size_t k = root.id() + 1; k-- > 0;) {
            Node& n = nodes_[k];
            if (!n.tracked || !n.has_grad)
                continue;
            if (n.backward)
                n.backward(*this, k);
        }
    }
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        Node& n = nodes_[k];
        if (n.leaf == LeafKind::parameter && n.has_grad) {
            if (!n.grad.all_finite())
                throw NumericError("non-finite gradient of " + n.param->name);
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                n.param->grad[i] += n.grad[i];
        } else if (n.leaf == LeafKind::variable) {
            if (n.has_grad)
                out.grads_.emplace(k, std::move(n.grad));
            else
                out.zeros_.emplace(k, Tensor(n.value.shape()));
        }
    }
    clear();
    return out;
}

void Tape::clear() { nodes_.clear(); }

namespace {

Tape& common_tape(const Var& a, const Var& b)
{
    if (!a.tape() || a.tape() != b.tape())
        throw ContractError("operands live on different tapes");
    return *a.tape();
}

enum class Broadcast { same, left_scalar, right_scalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.shape() == b.shape())
        return Broadcast::same;
    if (a.size() == 1)
        return Broadcast::left_scalar;
    if (b.size() == 1)
        return Broadcast::right_scalar;
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
}

template <typename F>
Tensor map_binary(const Tensor& a, const Tensor& b, Broadcast kind, F f)
{
    const Tensor& big = kind == Broadcast::left_scalar ? b : a;
    Tensor out(big.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double x = kind == Broadcast::left_scalar ? a[0] : a[i];
        double y = kind == Broadcast::right_scalar ? b[0] : b[i];
        out[i] = f(x, y);
    }
    return out;
}

// Reduce an output-shaped gradient back onto an operand that may have been broadcast.
Tensor reduce_to(const Tensor& g, const Tensor& operand)
{
    if (operand.size() == g.size())
        return g;
    Tensor r(operand.shape());
    r[0] = sum(g);
    return r;
}

template <typename F>
Var unary(const Var& a, Tensor out, F local_grad)
{
    Tape& t = *a.tape();
    std::size_t ia = a.id();
    return t.record(std::move(out), {ia}, [ia, local_grad](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& x = tp.value(ia);
        const Tensor& y = tp.value(self);
        Tensor ga(x.shape());
        for (std::size_t i = 0; i < ga.size(); ++i)
            ga[i] = g[i] * local_grad(x[i], y[i]);
        tp.accumulate(ia, ga);
    });
}

template <typename F>
Tensor map_unary(const Tensor& x, F f)
{
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = f(x[i]);
    return out;
}

}  // namespace

Var add(const Var& a, const Var& b)
{
    Tape& t = common_tape(a, b);
    auto kind = broadcast_kind(a.value(), b.value(), "add");
    Tensor out = map_binary(a.value(), b.value(), kind, [](double x, double y) { return x + y; });
    std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        tp.accumulate(ia, reduce_to(g, tp.value(ia)));
        tp.accumulate(ib, reduce_to(g, tp.value(ib)));
    });
}

Var sub(const Var& a, const Var& b)
{
    Tape& t = common_tape(a, b);
    auto kind = broadcast_kind(a.value(), b.value(), "sub");
    Tensor out = map_binary(a.value(), b.value(), kind, [](double x, double y) { return x - y; });
    std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        tp.accumulate(ia, reduce_to(g, tp.value(ia)));
        tp.accumulate_scaled(ib, reduce_to(g, tp.value(ib)), -1.0);
    });
}

Var mul(const Var& a, const Var& b)
{
    Tape& t = common_tape(a, b);
    auto kind = broadcast_kind(a.value(), b.value(), "mul");
    Tensor out = map_binary(a.value(), b.value(), kind, [](double x, double y) { return x * y; });
    std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {ia, ib}, [ia, ib, kind](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& x = tp.value(ia);
        const Tensor& y = tp.value(ib);
        if (tp.tracked(ia)) {
            Tensor ga = map_binary(g, y, kind == Broadcast::right_scalar ? Broadcast::right_scalar : Broadcast::same,
                                   [](double gi, double yi) { return gi * yi; });
            tp.accumulate(ia, reduce_to(ga, x));
        }
        if (tp.tracked(ib)) {
            Tensor gb = map_binary(g, x, kind == Broadcast::left_scalar ? Broadcast::right_scalar : Broadcast::same,
                                   [](double gi, double xi) { return gi * xi; });
            tp.accumulate(ib, reduce_to(gb, y));
        }
    });
}

Var scale(const Var& a, double s)
{
    Tensor out = s * a.value();
    return unary(a, std::move(out), [s](double, double) { return s; });
}

Var shift(const Var& a, double c)
{
    Tensor out = map_unary(a.value(), [c](double x) { return x + c; });
    return unary(a, std::move(out), [](double, double) { return 1.0; });
}

Var square(const Var& a)
{
    Tensor out = map_unary(a.value(), [](double x) { return x * x; });
    return unary(a, std::move(out), [](double x, double) { return 2.0 * x; });
}

Var abs(const Var& a)
{
    Tensor out = map_unary(a.value(), [](double x) { return std::fabs(x); });
    return unary(a, std::move(out), [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var abs_pow(const Var& a, double p)
{
    if (!(p > 0))
        throw DomainError("abs_pow exponent must be positive");
    Tensor out = map_unary(a.value(), [p](double x) { return std::pow(std::fabs(x), p); });
    return unary(a, std::move(out), [p](double x, double) {
        if (x == 0)
            return 0.0;
        double s = x > 0 ? 1.0 : -1.0;
        return p * std::pow(std::fabs(x), p - 1.0) * s;
    });
}

Var sqrt(const Var& a)
{
    for (double v : a.value().data())
        if (v < 0)
            throw DomainError("sqrt of a negative entry");
    Tensor out = map_unary(a.value(), [](double x) { return std::sqrt(x); });
    return unary(a, std::move(out), [](double, double y) {
        if (y == 0)
            throw NumericError("sqrt derivative at 0");
        return 0.5 / y;
    });
}

Var leaky_relu(const Var& a, double alpha)
{
    Tensor out = map_unary(a.value(), [alpha](double x) { return x > 0 ? x : alpha * x; });
    return unary(a, std::move(out), [alpha](double x, double) { return x > 0 ? 1.0 : alpha; });
}

Var sum(const Var& a)
{
    Tape& t = *a.tape();
    std::size_t ia = a.id();
    return t.record(Tensor::scalar(sum(a.value())), {ia}, [ia](Tape& tp, std::size_t self) {
        double g = tp.grad(self)[0];
        tp.accumulate(ia, Tensor(tp.value(ia).shape(), g));
    });
}

Var mean(const Var& a)
{
    double n = static_cast<double>(a.value().size());
    return scale(sum(a), 1.0 / n);
}

Var matmul(const Var& a, const Var& b)
{
    Tape& t = common_tape(a, b);
    Tensor out = matmul(a.value(), b.value());
    std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        if (tp.tracked(ia)) {
            Tensor ga(tp.value(ia).shape());
            as_matrix(ga).noalias() = as_matrix(g) * as_matrix(tp.value(ib)).transpose();
            tp.accumulate(ia, ga);
        }
        if (tp.tracked(ib)) {
            Tensor gb(tp.value(ib).shape());
            as_matrix(gb).noalias() = as_matrix(tp.value(ia)).transpose() * as_matrix(g);
            tp.accumulate(ib, gb);
        }
    });
}

Var transpose(const Var& a)
{
    Tape& t = *a.tape();
    std::size_t ia = a.id();
    return t.record(transpose(a.value()), {ia}, [ia](Tape& tp, std::size_t self) {
        tp.accumulate(ia, transpose(tp.grad(self)));
    });
}

Var add_row(const Var& a, const Var& row)
{
    Tape& t = common_tape(a, row);
    Tensor out = add_row(a.value(), row.value());
    std::size_t ia = a.id(), ir = row.id();
    return t.record(std::move(out), {ia, ir}, [ia, ir](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        tp.accumulate(ia, g);
        if (tp.tracked(ir)) {
            Tensor gr(tp.value(ir).shape());
            std::size_t c = g.cols();
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t j = 0; j < c; ++j)
                    gr[j] += g[r * c + j];
            tp.accumulate(ir, gr);
        }
    });
}

Var row_sum(const Var& a)
{
    Tape& t = *a.tape();
    const Tensor& x = a.value();
    std::size_t r = x.rows(), c = x.cols();
    Tensor out({r});
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < c; ++j)
            s += x[i * c + j];
        out[i] = s;
    }
    std::size_t ia = a.id();
    return t.record(std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& x = tp.value(ia);
        std::size_t c = x.cols();
        Tensor ga(x.shape());
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < c; ++j)
                ga[i * c + j] = g[i];
        tp.accumulate(ia, ga);
    });
}

Var reshape(const Var& a, Shape shape)
{
    Tape& t = *a.tape();
    std::size_t ia = a.id();
    return t.record(a.value().reshaped(std::move(shape)), {ia}, [ia](Tape& tp, std::size_t self) {
        tp.accumulate(ia, tp.grad(self).reshaped(tp.value(ia).shape()));
    });
}

}  // namespace otlab
