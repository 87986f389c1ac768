#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tbm {

/// Dense order-K real tensor with explicit dimensions.
///
/// Canonical linear layout: the LAST index varies fastest (row-major over
/// (i_1,...,i_K)), i.e. linear index of (i_1,...,i_K) is
/// ((...(i_1*d_2 + i_2)*d_3 ...)*d_K + i_K). The same ordering is used in
/// the `.tsr` file format, so serialized tensors are portable byte-for-byte.
///
/// Instances are treated as immutable after construction and are safe to
/// share read-only across threads.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor. Requires K >= 1 and every d_k >= 1.
    explicit Tensor(std::vector<std::size_t> dims);

    /// Requires data.size() == prod(dims).
    Tensor(std::vector<std::size_t> dims, std::vector<double> data);

    static Tensor constant(std::vector<std::size_t> dims, double value);

    std::size_t order() const { return dims_.size(); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t dim(std::size_t mode) const { return dims_[mode]; }
    std::size_t size() const { return data_.size(); }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    double operator[](std::size_t linear) const { return data_[linear]; }
    double& operator[](std::size_t linear) { return data_[linear]; }

    std::size_t linear_index(std::span<const std::size_t> idx) const;
    std::vector<std::size_t> multi_index(std::size_t linear) const;

    double at(std::span<const std::size_t> idx) const {
        return data_[linear_index(idx)];
    }
    double& at(std::span<const std::size_t> idx) {
        return data_[linear_index(idx)];
    }

    bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }

    bool operator==(const Tensor&) const = default;

private:
    std::vector<std::size_t> dims_;
    std::vector<double> data_;
};

/// Dense row-major matrix; the 2-d shape used by unfoldings and
/// multilinear multiplication.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double operator()(std::size_t r, std::size_t c) const {
        return data_[r * cols_ + c];
    }
    double& operator()(std::size_t r, std::size_t c) {
        return data_[r * cols_ + c];
    }

    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }
    std::span<double> row(std::size_t r) {
        return {data_.data() + r * cols_, cols_};
    }

    const std::vector<double>& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Mode product: contracts mode `mode` of t (0-based) against mat, which
/// must have cols == t.dim(mode). Result has that dimension replaced by
/// mat.rows().
Tensor mode_multiply(const Tensor& t, const Matrix& mat, std::size_t mode);

/// Multilinear (Tucker) multiplication against one matrix per mode,
/// mats[k] shaped s_k x d_k. Executed as K successive mode products, so the
/// cost of step k is O(s_k * prod of current remaining dims) rather than
/// the naive all-modes sum.
Tensor multilinear_multiply(const Tensor& t, std::span<const Matrix> mats);

/// Sum of elementwise products. Requires identical dims.
double inner_product(const Tensor& a, const Tensor& b);

double frobenius_norm(const Tensor& t);
double max_norm(const Tensor& t);

/// Mode-k unfolding (0-based mode): row i is slice i along mode k,
/// flattened in canonical order of the remaining modes.
Matrix unfold(const Tensor& t, std::size_t mode);

/// Inverse of unfold: reassembles a tensor of shape `dims` from its mode-k
/// unfolding.
Tensor refold(const Matrix& m, std::size_t mode,
              std::vector<std::size_t> dims);

}  // namespace tbm
