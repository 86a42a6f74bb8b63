#include "otlab/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "otlab/errors.hpp"

namespace otlab {

std::size_t shape_size(const Shape& shape)
{
    std::size_t n = 1;
    for (auto d : shape) {
        if (d == 0)
            throw DimensionError("tensor shape " + shape_string(shape) + " has a zero extent");
        n *= d;
    }
    return n;
}

std::string shape_string(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i)
        os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor::Tensor() : data_(1, 0.0) {}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data))
{
    if (shape_size(shape_) != data_.size())
        throw DimensionError("tensor shape " + shape_string(shape_) + " does not match buffer of length " +
                             std::to_string(data_.size()));
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor Tensor::vector(std::initializer_list<double> values)
{
    return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    std::size_t r = rows.size();
    std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c)
            throw DimensionError("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::rows() const
{
    if (rank() != 2)
        throw DimensionError("expected a rank-2 tensor, got shape " + shape_string(shape_));
    return shape_[0];
}

std::size_t Tensor::cols() const
{
    if (rank() != 2)
        throw DimensionError("expected a rank-2 tensor, got shape " + shape_string(shape_));
    return shape_[1];
}

double Tensor::item() const
{
    if (data_.size() != 1)
        throw DimensionError("item() on tensor of shape " + shape_string(shape_));
    return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const
{
    if (shape_size(shape) != data_.size())
        throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    return Tensor(std::move(shape), data_);
}

Tensor Tensor::row(std::size_t r) const { return rows_range(r, r + 1); }

Tensor Tensor::rows_range(std::size_t begin, std::size_t end) const
{
    std::size_t c = cols();
    if (begin >= end || end > rows())
        throw DimensionError("row range out of bounds");
    std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(begin * c),
                            data_.begin() + static_cast<std::ptrdiff_t>(end * c));
    return Tensor({end - begin, c}, std::move(out));
}

bool Tensor::all_finite() const
{
    for (double v : data_)
        if (!std::isfinite(v))
            return false;
    return true;
}

void Tensor::require_finite(std::string_view what) const
{
    if (!all_finite())
        throw NumericError("non-finite value produced by " + std::string(what));
}

Tensor from_eigen(const Eigen::MatrixXd& m)
{
    Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    as_matrix(t) = m;
    return t;
}

Tensor from_eigen_rows(const Eigen::VectorXd& v)
{
    Tensor t({1, static_cast<std::size_t>(v.size())});
    for (Eigen::Index i = 0; i < v.size(); ++i)
        t[static_cast<std::size_t>(i)] = v[i];
    return t;
}

Eigen::MatrixXd to_eigen(const Tensor& t) { return as_matrix(t); }

Tensor matmul(const Tensor& a, const Tensor& b)
{
    if (a.cols() != b.rows())
        throw DimensionError("matmul inner dimensions differ: " + shape_string(a.shape()) + " x " +
                             shape_string(b.shape()));
    Tensor out({a.rows(), b.cols()});
    as_matrix(out).noalias() = as_matrix(a) * as_matrix(b);
    return out;
}

Tensor transpose(const Tensor& a)
{
    Tensor out({a.cols(), a.rows()});
    as_matrix(out) = as_matrix(a).transpose();
    return out;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                             shape_string(b.shape()) + " differ");
}

}  // namespace

Tensor operator+(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "add");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] += b[i];
    return out;
}

Tensor operator-(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] -= b[i];
    return out;
}

Tensor operator*(double s, const Tensor& a)
{
    Tensor out = a;
    for (auto& v : out.data())
        v *= s;
    return out;
}

Tensor add_row(const Tensor& a, const Tensor& row)
{
    if (row.size() != a.cols())
        throw DimensionError("add_row: row of length " + std::to_string(row.size()) + " vs " +
                             std::to_string(a.cols()) + " columns");
    Tensor out = a;
    std::size_t c = a.cols();
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t j = 0; j < c; ++j)
            out[r * c + j] += row[j];
    return out;
}

Tensor vstack(std::span<const Tensor> parts)
{
    if (parts.empty())
        throw DimensionError("vstack of nothing");
    std::size_t c = parts.front().cols();
    std::size_t r = 0;
    for (const auto& p : parts) {
        if (p.cols() != c)
            throw DimensionError("vstack: column counts differ");
        r += p.rows();
    }
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& p : parts)
        data.insert(data.end(), p.data().begin(), p.data().end());
    return Tensor({r, c}, std::move(data));
}

double sum(const Tensor& a) { return std::accumulate(a.data().begin(), a.data().end(), 0.0); }

double mean(const Tensor& a) { return sum(a) / static_cast<double>(a.size()); }

}  // namespace otlab
