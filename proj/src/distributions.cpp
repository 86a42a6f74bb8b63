#include "otlab/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "otlab/errors.hpp"

namespace otlab {

Degradation Degradation::box(std::size_t width, std::size_t stride)
{
    if (width == 0 || stride == 0)
        throw ConfigError("box degradation needs positive width and stride");
    return Degradation{std::vector<double>(width, 1.0 / static_cast<double>(width)), stride};
}

std::size_t Degradation::output_dim(std::size_t n) const
{
    if (stride == 0 || n % stride != 0)
        throw ConfigError("signal dim " + std::to_string(n) + " is not divisible by stride " +
                          std::to_string(stride));
    return n / stride;
}

Tensor Degradation::apply(const Tensor& hr) const
{
    std::size_t n = hr.cols();
    std::size_t m = output_dim(n);
    Tensor out({hr.rows(), m});
    for (std::size_t r = 0; r < hr.rows(); ++r)
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0;
            for (std::size_t t = 0; t < kernel.size(); ++t)
                s += kernel[t] * hr.at(r, (j * stride + t) % n);
            out.at(r, j) = s;
        }
    return out;
}

void Distribution::reseed(std::uint64_t seed)
{
    rng_.seed(derive_seed(seed, "draws"));
    choice_rng_.seed(derive_seed(seed, "choice"));
    for (std::size_t k = 0; k < components_.size(); ++k)
        components_[k].reseed(derive_seed(seed, "component", k));
}

Distribution Distribution::gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov, std::uint64_t seed)
{
    auto d = static_cast<std::size_t>(mean.size());
    if (d == 0 || cov.rows() != mean.size() || cov.cols() != mean.size())
        throw DimensionError("gaussian: mean/covariance dimensions do not match");
    if (!cov.isApprox(cov.transpose(), 1e-12))
        throw DomainError("gaussian: covariance is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw DomainError("gaussian: covariance is not positive-definite");
    Distribution out;
    out.kind_ = Kind::gaussian;
    out.dim_ = d;
    out.mean_ = std::move(mean);
    out.cov_ = std::move(cov);
    out.chol_ = llt.matrixL();
    out.reseed(seed);
    return out;
}

Distribution Distribution::mixture(std::vector<double> weights, std::vector<Distribution> components,
                                   std::uint64_t seed)
{
    if (weights.empty() || weights.size() != components.size())
        throw ConfigError("mixture: need one weight per component");
    double total = 0;
    for (double w : weights) {
        if (!(w >= 0))
            throw DomainError("mixture: weights must be nonnegative");
        total += w;
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw DomainError("mixture: weights must sum to 1");
    std::size_t d = components.front().dim();
    for (const auto& c : components)
        if (c.dim() != d)
            throw DimensionError("mixture: components have different dims");
    Distribution out;
    out.kind_ = Kind::mixture;
    out.dim_ = d;
    out.weights_ = std::move(weights);
    out.cdf_.resize(out.weights_.size());
    std::partial_sum(out.weights_.begin(), out.weights_.end(), out.cdf_.begin());
    out.components_ = std::move(components);
    out.reseed(seed);
    return out;
}

Distribution Distribution::discrete_atoms(Tensor points, std::vector<double> weights, std::uint64_t seed)
{
    if (points.rows() != weights.size())
        throw DimensionError("discrete atoms: one weight per atom required");
    double total = 0;
    for (double w : weights) {
        if (!(w >= 0))
            throw DomainError("discrete atoms: weights must be nonnegative");
        total += w;
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw DomainError("discrete atoms: weights must sum to 1");
    Distribution out;
    out.kind_ = Kind::discrete_atoms;
    out.dim_ = points.cols();
    out.atoms_ = std::move(points);
    out.weights_ = std::move(weights);
    out.cdf_.resize(out.weights_.size());
    std::partial_sum(out.weights_.begin(), out.weights_.end(), out.cdf_.begin());
    out.reseed(seed);
    return out;
}

namespace {

std::size_t pick(const std::vector<double>& cdf, double u)
{
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto k = static_cast<std::size_t>(it - cdf.begin());
    return std::min(k, cdf.size() - 1);
}

}  // namespace

Tensor Distribution::sample_hr_signal(std::size_t batch)
{
    std::normal_distribution<double> normal;
    std::size_t n = signal_dim_;
    std::size_t w = smoothing_.size();
    std::vector<double> noise(n);
    Tensor out({batch, n});
    for (std::size_t r = 0; r < batch; ++r) {
        for (auto& z : noise)
            z = normal(rng_);
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0;
            for (std::size_t t = 0; t < w; ++t)
                s += smoothing_[t] * noise[(j + t) % n];
            out.at(r, j) = s;
        }
    }
    return out;
}

Tensor Distribution::sample(std::size_t batch)
{
    if (batch == 0)
        throw ContractError("sample: batch must be >= 1");
    Tensor out({batch, dim_});
    switch (kind_) {
    case Kind::gaussian: {
        std::normal_distribution<double> normal;
        Eigen::VectorXd z(static_cast<Eigen::Index>(dim_));
        for (std::size_t r = 0; r < batch; ++r) {
            for (Eigen::Index i = 0; i < z.size(); ++i)
                z[i] = normal(rng_);
            Eigen::VectorXd x = mean_ + chol_ * z;
            for (std::size_t j = 0; j < dim_; ++j)
                out.at(r, j) = x[static_cast<Eigen::Index>(j)];
        }
        break;
    }
    case Kind::mixture: {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (std::size_t r = 0; r < batch; ++r) {
            Tensor x = components_[pick(cdf_, unif(choice_rng_))].sample(1);
            for (std::size_t j = 0; j < dim_; ++j)
                out.at(r, j) = x[j];
        }
        break;
    }
    case Kind::discrete_atoms: {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (std::size_t r = 0; r < batch; ++r) {
            std::size_t k = pick(cdf_, unif(rng_));
            for (std::size_t j = 0; j < dim_; ++j)
                out.at(r, j) = atoms_.at(k, j);
        }
        break;
    }
    case Kind::synthetic_sr: {
        Tensor hr = sample_hr_signal(batch);
        out = role_ == Role::hr ? std::move(hr) : degradation_->apply(hr);
        break;
    }
    }
    return out;
}

Distribution Distribution::with_stream(std::uint64_t seed) const
{
    Distribution copy = *this;
    copy.reseed(seed);
    return copy;
}

std::vector<double> smoothing_kernel(std::size_t signal_dim, double width)
{
    if (!(width > 0))
        throw ConfigError("smoothing width must be positive");
    auto half = static_cast<std::size_t>(std::ceil(4.0 * width));
    std::size_t taps = std::min(2 * half + 1, signal_dim);
    std::vector<double> k(taps);
    double centre = static_cast<double>(taps - 1) / 2.0;
    double norm = 0;
    for (std::size_t t = 0; t < taps; ++t) {
        double u = (static_cast<double>(t) - centre) / width;
        k[t] = std::exp(-0.5 * u * u);
        norm += k[t] * k[t];
    }
    for (auto& v : k)
        v /= std::sqrt(norm);
    return k;
}

SrPair make_sr_pair(std::size_t signal_dim, const Degradation& degradation, std::uint64_t seed,
                    double smoothing_width)
{
    std::size_t lr_dim = degradation.output_dim(signal_dim);
    double ksum = std::accumulate(degradation.kernel.begin(), degradation.kernel.end(), 0.0);
    if (std::fabs(ksum - 1.0) > 1e-12)
        throw ConfigError("degradation kernel must sum to 1");

    auto shared = std::make_shared<const Degradation>(degradation);
    auto smoothing = smoothing_kernel(signal_dim, smoothing_width);

    Distribution hr;
    hr.kind_ = Distribution::Kind::synthetic_sr;
    hr.role_ = Distribution::Role::hr;
    hr.dim_ = signal_dim;
    hr.signal_dim_ = signal_dim;
    hr.smoothing_ = smoothing;
    hr.degradation_ = shared;
    hr.reseed(derive_seed(seed, "hr"));

    Distribution lr = hr;
    lr.role_ = Distribution::Role::lr;
    lr.dim_ = lr_dim;
    lr.reseed(derive_seed(seed, "lr"));

    return SrPair{std::move(lr), std::move(hr), degradation};
}

}  // namespace otlab
