#pragma once

// Dense row-major float-64 tensors.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace otlab {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tensor {
public:
    /// Scalar zero.
    Tensor();
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double value);
    static Tensor vector(std::initializer_list<double> values);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }
    static Tensor ones(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}, 1.0); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool is_scalar() const { return data_.size() == 1; }

    /// Rows/cols of a rank-2 tensor; throws DimensionError otherwise.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    const std::vector<double>& buffer() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    /// Value of a single-element tensor.
    double item() const;

    Tensor reshaped(Shape shape) const;
    Tensor row(std::size_t r) const;
    Tensor rows_range(std::size_t begin, std::size_t end) const;

    bool all_finite() const;
    /// Throws NumericError naming `what` if any entry is NaN/Inf.
    void require_finite(std::string_view what) const;

    bool operator==(const Tensor& other) const = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<RowMatrix> as_matrix(Tensor& t) { return {t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())}; }
inline Eigen::Map<const RowMatrix> as_matrix(const Tensor& t) { return {t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())}; }

Tensor from_eigen(const Eigen::MatrixXd& m);
Tensor from_eigen_rows(const Eigen::VectorXd& v);  // 1 x n
Eigen::MatrixXd to_eigen(const Tensor& t);

// Plain (untracked) arithmetic used by inference paths and oracles.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& a);
/// Rank-2 `a` plus a 1 x cols row vector added to every row.
Tensor add_row(const Tensor& a, const Tensor& row);
/// Stack rank-2 tensors with equal column counts.
Tensor vstack(std::span<const Tensor> parts);

double sum(const Tensor& a);
double mean(const Tensor& a);

}  // namespace otlab
