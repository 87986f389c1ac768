#include "tbm/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tbm {

namespace {

std::size_t checked_size(const std::vector<std::size_t>& dims) {
    if (dims.empty()) {
        throw std::invalid_argument("tensor order must be >= 1");
    }
    std::size_t n = 1;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (dims[k] == 0) {
            throw std::invalid_argument("tensor dimension " +
                                        std::to_string(k) + " must be >= 1");
        }
        n *= dims[k];
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims)
    : dims_(std::move(dims)), data_(checked_size(dims_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    if (checked_size(dims_) != data_.size()) {
        throw std::invalid_argument(
            "tensor data length does not match product of dims");
    }
}

Tensor Tensor::constant(std::vector<std::size_t> dims, double value) {
    Tensor t(std::move(dims));
    for (double& v : t.data_) v = value;
    return t;
}

std::size_t Tensor::linear_index(std::span<const std::size_t> idx) const {
    if (idx.size() != dims_.size()) {
        throw std::invalid_argument("multi-index order mismatch");
    }
    std::size_t lin = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        if (idx[k] >= dims_[k]) {
            throw std::out_of_range("index out of range in mode " +
                                    std::to_string(k));
        }
        lin = lin * dims_[k] + idx[k];
    }
    return lin;
}

std::vector<std::size_t> Tensor::multi_index(std::size_t linear) const {
    std::vector<std::size_t> idx(dims_.size());
    for (std::size_t k = dims_.size(); k-- > 0;) {
        idx[k] = linear % dims_[k];
        linear /= dims_[k];
    }
    return idx;
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw std::invalid_argument("matrix data length mismatch");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

namespace {

void check_mode(const Tensor& t, std::size_t mode) {
    if (mode >= t.order()) {
        throw std::invalid_argument("mode " + std::to_string(mode) +
                                    " out of range for order-" +
                                    std::to_string(t.order()) + " tensor");
    }
}

}  // namespace

Tensor mode_multiply(const Tensor& t, const Matrix& mat, std::size_t mode) {
    check_mode(t, mode);
    if (mat.cols() != t.dim(mode)) {
        throw std::invalid_argument(
            "matrix for mode " + std::to_string(mode) + " has " +
            std::to_string(mat.cols()) + " columns, tensor dimension is " +
            std::to_string(t.dim(mode)));
    }
    const std::size_t axis = t.dim(mode);
    const std::size_t rows = mat.rows();
    std::size_t outer = 1, inner = 1;
    for (std::size_t k = 0; k < mode; ++k) outer *= t.dim(k);
    for (std::size_t k = mode + 1; k < t.order(); ++k) inner *= t.dim(k);

    std::vector<std::size_t> out_dims = t.dims();
    out_dims[mode] = rows;
    Tensor out(std::move(out_dims));

    const double* src = t.data().data();
    double* dst = out.data().data();
    for (std::size_t o = 0; o < outer; ++o) {
        const double* slab = src + o * axis * inner;
        double* oslab = dst + o * rows * inner;
        for (std::size_t r = 0; r < rows; ++r) {
            double* orow = oslab + r * inner;
            for (std::size_t i = 0; i < axis; ++i) {
                const double w = mat(r, i);
                const double* irow = slab + i * inner;
                for (std::size_t j = 0; j < inner; ++j) {
                    orow[j] += w * irow[j];
                }
            }
        }
    }
    return out;
}

Tensor multilinear_multiply(const Tensor& t, std::span<const Matrix> mats) {
    if (mats.size() != t.order()) {
        throw std::invalid_argument("expected one matrix per mode");
    }
    for (std::size_t k = 0; k < mats.size(); ++k) {
        if (mats[k].cols() != t.dim(k)) {
            throw std::invalid_argument(
                "matrix for mode " + std::to_string(k) + " has " +
                std::to_string(mats[k].cols()) +
                " columns, tensor dimension is " + std::to_string(t.dim(k)));
        }
    }
    Tensor cur = t;
    for (std::size_t k = 0; k < mats.size(); ++k) {
        cur = mode_multiply(cur, mats[k], k);
    }
    return cur;
}

double inner_product(const Tensor& a, const Tensor& b) {
    if (!a.same_dims(b)) {
        throw std::invalid_argument("inner product requires identical dims");
    }
    // Left-to-right accumulation: deterministic over last-bit accuracy.
    double s = 0.0;
    const std::vector<double>& av = a.data();
    const std::vector<double>& bv = b.data();
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
    return s;
}

double frobenius_norm(const Tensor& t) {
    return std::sqrt(inner_product(t, t));
}

double max_norm(const Tensor& t) {
    double m = 0.0;
    for (double v : t.data()) m = std::max(m, std::abs(v));
    return m;
}

Matrix unfold(const Tensor& t, std::size_t mode) {
    check_mode(t, mode);
    const std::size_t axis = t.dim(mode);
    std::size_t outer = 1, inner = 1;
    for (std::size_t k = 0; k < mode; ++k) outer *= t.dim(k);
    for (std::size_t k = mode + 1; k < t.order(); ++k) inner *= t.dim(k);

    Matrix m(axis, outer * inner);
    const double* src = t.data().data();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < axis; ++i) {
            const double* row = src + (o * axis + i) * inner;
            double* dst = m.row(i).data() + o * inner;
            for (std::size_t j = 0; j < inner; ++j) dst[j] = row[j];
        }
    }
    return m;
}

Tensor refold(const Matrix& m, std::size_t mode,
              std::vector<std::size_t> dims) {
    Tensor t(std::move(dims));
    check_mode(t, mode);
    const std::size_t axis = t.dim(mode);
    std::size_t outer = 1, inner = 1;
    for (std::size_t k = 0; k < mode; ++k) outer *= t.dim(k);
    for (std::size_t k = mode + 1; k < t.order(); ++k) inner *= t.dim(k);
    if (m.rows() != axis || m.cols() != outer * inner) {
        throw std::invalid_argument("unfolding shape does not match dims");
    }
    double* dst = t.data().data();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < axis; ++i) {
            const double* src = m.row(i).data() + o * inner;
            double* row = dst + (o * axis + i) * inner;
            for (std::size_t j = 0; j < inner; ++j) row[j] = src[j];
        }
    }
    return t;
}

}  // namespace tbm
