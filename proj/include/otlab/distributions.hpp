#pragma once

// Seeded samplers over R^d.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "otlab/rng.hpp"
#include "otlab/tensor.hpp"

namespace otlab {

/// Blur-then-subsample degradation of 1-D signals.
/// LR_j = sum_t kernel[t] * HR[(j*stride + t) mod n].
struct Degradation {
    std::vector<double> kernel;
    std::size_t stride = 1;

    /// Box blur of `width` taps (each 1/width) followed by subsampling.
    static Degradation box(std::size_t width, std::size_t stride);

    std::size_t output_dim(std::size_t n) const;
    Tensor apply(const Tensor& hr) const;
};

class Distribution {
public:
    enum class Kind { gaussian, mixture, discrete_atoms, synthetic_sr };
    enum class Role { lr, hr };

    /// N(mean, cov); throws DomainError if cov is not symmetric positive-definite.
    static Distribution gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov, std::uint64_t seed);
    /// Component chosen by inverse CDF on a dedicated substream, then sampled.
    static Distribution mixture(std::vector<double> weights, std::vector<Distribution> components,
                                std::uint64_t seed);
    /// Atoms are the rows of `points`.
    static Distribution discrete_atoms(Tensor points, std::vector<double> weights, std::uint64_t seed);

    Kind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }

    Tensor sample(std::size_t batch);

    /// Same law on a fresh, independent seed stream.
    Distribution with_stream(std::uint64_t seed) const;

    // Accessors for the closed-form parts (gaussian/atoms).
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& covariance() const { return cov_; }
    const Tensor& atoms() const { return atoms_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    friend struct SrPair make_sr_pair(std::size_t, const struct Degradation&, std::uint64_t, double);
    Distribution() = default;
    void reseed(std::uint64_t seed);
    Tensor sample_hr_signal(std::size_t batch);

    Kind kind_ = Kind::gaussian;
    std::size_t dim_ = 0;
    Rng rng_;
    Rng choice_rng_;

    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd chol_;

    std::vector<double> weights_;
    std::vector<double> cdf_;
    std::vector<Distribution> components_;
    Tensor atoms_;

    Role role_ = Role::hr;
    std::size_t signal_dim_ = 0;
    std::vector<double> smoothing_;
    std::shared_ptr<const Degradation> degradation_;
};

/// Unpaired synthetic super-resolution pair. The degradation is kept here for
/// evaluation; solvers only ever see the two samplers.
struct SrPair {
    Distribution lr;
    Distribution hr;
    Degradation degradation;
};

/// Circular smoothing kernel used for the HR random fields (unit marginal variance).
std::vector<double> smoothing_kernel(std::size_t signal_dim, double width);

/// HR: white noise circularly convolved with a fixed Gaussian kernel of `smoothing_width`.
/// LR: degradation applied to independent HR draws.
SrPair make_sr_pair(std::size_t signal_dim, const Degradation& degradation, std::uint64_t seed,
                    double smoothing_width = 2.0);

}  // namespace otlab
