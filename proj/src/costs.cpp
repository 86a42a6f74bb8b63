#include "otlab/costs.hpp"

#include <sstream>

#include "otlab/errors.hpp"
#include "otlab/rng.hpp"

namespace otlab {

struct CostFn::Node {
    Kind kind = Kind::quadratic;
    double p = 2.0;
    double lambda = 1.0;
    Upsampler up;
    FrozenMap frozen;
    std::vector<FrozenMap> extractors;
    std::shared_ptr<const Node> base;
};

namespace {

void require_same_dims(const Tensor& x, const Tensor& y, const char* what)
{
    if (x.rows() != y.rows())
        throw DimensionError(std::string(what) + ": batch sizes differ");
    if (x.cols() != y.cols())
        throw DimensionError(std::string(what) + ": dim(X)=" + std::to_string(x.cols()) +
                             " but dim(Y)=" + std::to_string(y.cols()));
}

}  // namespace

CostFn CostFn::quadratic() { return CostFn(std::make_shared<const Node>(Node{Kind::quadratic})); }
CostFn CostFn::mse() { return CostFn(std::make_shared<const Node>(Node{Kind::mse})); }
CostFn CostFn::mae() { return CostFn(std::make_shared<const Node>(Node{Kind::mae})); }

CostFn CostFn::lp(double p)
{
    if (!(p > 0))
        throw ConfigError("Lp cost needs p > 0");
    Node n{Kind::lp};
    n.p = p;
    return CostFn(std::make_shared<const Node>(std::move(n)));
}

CostFn CostFn::composite_upsample(CostFn base, Upsampler up)
{
    Node n{Kind::composite_upsample};
    n.up = up;
    n.base = base.node_;
    return CostFn(std::make_shared<const Node>(std::move(n)));
}

CostFn CostFn::dynamic(CostFn base, FrozenMap frozen)
{
    if (frozen.empty())
        throw ConfigError("dynamic cost needs an initial frozen map");
    Node n{Kind::dynamic};
    n.frozen = std::move(frozen);
    n.base = base.node_;
    return CostFn(std::make_shared<const Node>(std::move(n)));
}

CostFn CostFn::feature(std::size_t dim, std::size_t n_extractors, std::size_t width, std::uint64_t seed)
{
    Node n{Kind::feature};
    for (std::size_t k = 0; k < n_extractors; ++k)
        n.extractors.emplace_back(Mlp({dim, width, width}, 0.2, derive_seed(seed, "feature", k)));
    return CostFn(std::make_shared<const Node>(std::move(n)));
}

CostFn scale_cost(const CostFn& c, double lambda)
{
    if (!(lambda > 0))
        throw ConfigError("cost scale must be > 0");
    CostFn::Node n{CostFn::Kind::scaled};
    n.lambda = lambda;
    n.base = c.node_;
    return CostFn(std::make_shared<const CostFn::Node>(std::move(n)));
}

CostFn refresh_dynamic(const CostFn& c, const Mlp& current_map)
{
    if (c.kind() != CostFn::Kind::dynamic)
        throw ContractError("refresh_dynamic needs a dynamic cost, got " + c.describe());
    CostFn::Node n = *c.node_;
    n.frozen = freeze(current_map);
    return CostFn(std::make_shared<const CostFn::Node>(std::move(n)));
}

CostFn::Kind CostFn::kind() const { return node_->kind; }

CostFn CostFn::base() const
{
    if (!node_->base)
        throw ContractError("cost " + describe() + " has no base cost");
    return CostFn(node_->base);
}

const FrozenMap& CostFn::frozen() const
{
    if (node_->kind != Kind::dynamic)
        throw ContractError("only dynamic costs carry a frozen map");
    return node_->frozen;
}

const Upsampler& CostFn::upsampler() const { return node_->up; }
double CostFn::weight() const { return node_->lambda; }
double CostFn::exponent() const { return node_->p; }

std::string CostFn::describe() const
{
    std::ostringstream os;
    switch (node_->kind) {
    case Kind::quadratic: os << "quadratic"; break;
    case Kind::mse: os << "mse"; break;
    case Kind::mae: os << "mae"; break;
    case Kind::lp: os << "l" << node_->p; break;
    case Kind::composite_upsample:
        os << CostFn(node_->base).describe() << "(up"
           << (node_->up.kind() == Upsampler::Kind::linear ? "-linear" : "-nearest") << "x"
           << node_->up.factor() << "(x), y)";
        break;
    case Kind::dynamic: os << "dynamic(" << CostFn(node_->base).describe() << ")"; break;
    case Kind::scaled: os << node_->lambda << "*" << CostFn(node_->base).describe(); break;
    case Kind::feature: os << "feature[" << node_->extractors.size() << "]"; break;
    }
    return os.str();
}

Var CostFn::eval(Tape& tape, const Tensor& x, const Var& y) const
{
    const Node& n = *node_;
    const Tensor& yv = y.value();
    switch (n.kind) {
    case Kind::quadratic: {
        require_same_dims(x, yv, "quadratic cost");
        return row_sum(square(sub(y, tape.constant(x))));
    }
    case Kind::mse: {
        require_same_dims(x, yv, "mse cost");
        double d = static_cast<double>(yv.cols());
        return scale(row_sum(square(sub(y, tape.constant(x)))), 1.0 / d);
    }
    case Kind::mae: {
        require_same_dims(x, yv, "mae cost");
        double d = static_cast<double>(yv.cols());
        return scale(row_sum(abs(sub(y, tape.constant(x)))), 1.0 / d);
    }
    case Kind::lp: {
        require_same_dims(x, yv, "lp cost");
        return row_sum(abs_pow(sub(y, tape.constant(x)), n.p));
    }
    case Kind::composite_upsample: {
        Tensor xu = n.up.apply(x);
        if (xu.cols() != yv.cols())
            throw DimensionError("composite cost: Up(x) has dim " + std::to_string(xu.cols()) +
                                 " but y has dim " + std::to_string(yv.cols()));
        return CostFn(n.base).eval(tape, xu, y);
    }
    case Kind::dynamic: {
        Tensor xt = n.frozen.apply(x);
        if (xt.cols() != yv.cols())
            throw DimensionError("dynamic cost: frozen map output dim does not match y");
        return CostFn(n.base).eval(tape, xt, y);
    }
    case Kind::scaled: return scale(CostFn(n.base).eval(tape, x, y), n.lambda);
    case Kind::feature: {
        require_same_dims(x, yv, "feature cost");
        double d = static_cast<double>(yv.cols());
        Var diff = sub(y, tape.constant(x));
        Var total = add(scale(row_sum(square(diff)), 1.0 / d), scale(row_sum(abs(diff)), 1.0 / (3.0 * d)));
        for (const auto& phi : n.extractors) {
            Tensor fx = phi.apply(x);
            Var fy = phi.forward(tape, y);
            double fd = static_cast<double>(fx.cols());
            total = add(total, scale(row_sum(square(sub(fy, tape.constant(fx)))), 1.0 / (50.0 * fd)));
        }
        return total;
    }
    }
    throw ContractError("unknown cost kind");
}

Tensor CostFn::eval(const Tensor& x, const Tensor& y) const
{
    Tape tape;
    Var out = eval(tape, x, tape.constant(y));
    return out.value();
}

Eigen::MatrixXd CostFn::pairwise(const Tensor& x, const Tensor& y) const
{
    std::size_t n = x.rows(), m = y.rows();
    Tensor xs({n * m, x.cols()});
    Tensor ys({n * m, y.cols()});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t r = i * m + j;
            for (std::size_t k = 0; k < x.cols(); ++k)
                xs.at(r, k) = x.at(i, k);
            for (std::size_t k = 0; k < y.cols(); ++k)
                ys.at(r, k) = y.at(j, k);
        }
    Tensor c = eval(xs, ys);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c[i * m + j];
    return out;
}

}  // namespace otlab
