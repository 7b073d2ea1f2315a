#pragma once

// Column-major dense matrix and the handful of BLAS-1/2/3 style kernels the
// solvers need. Everything is real double precision.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace sketchls {

using Vector = std::vector<double>;

/// Unit round-off of IEEE double, 2^-53.
inline constexpr double unit_roundoff = std::numeric_limits<double>::epsilon() / 2.0;

class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> column_major)
        : rows_(rows), cols_(cols), data_(std::move(column_major)) {
        if (data_.size() != rows_ * cols_)
            throw DimensionError("DenseMatrix: data length " + std::to_string(data_.size()) +
                                 " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix id(n, n);
        for (std::size_t i = 0; i < n; ++i) id(i, i) = 1.0;
        return id;
    }

    /// Build from row-major nested initializer data (tests, small fixtures).
    static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        const std::size_t m = rows.size();
        const std::size_t n = m == 0 ? 0 : rows.front().size();
        DenseMatrix a(m, n);
        for (std::size_t i = 0; i < m; ++i) {
            if (rows[i].size() != n) throw DimensionError("from_rows: ragged rows");
            for (std::size_t j = 0; j < n; ++j) a(i, j) = rows[i][j];
        }
        return a;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i + j * rows_]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i + j * rows_]; }

    std::span<double> col(std::size_t j) noexcept { return {data_.data() + j * rows_, rows_}; }
    std::span<const double> col(std::size_t j) const noexcept {
        return {data_.data() + j * rows_, rows_};
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    Vector row(std::size_t i) const {
        Vector r(cols_);
        for (std::size_t j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
        return r;
    }

    DenseMatrix transpose() const {
        DenseMatrix t(cols_, rows_);
        for (std::size_t j = 0; j < cols_; ++j)
            for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
        return t;
    }

    /// Leading `r` x `c` block.
    DenseMatrix block(std::size_t r, std::size_t c) const {
        DenseMatrix b(r, c);
        for (std::size_t j = 0; j < c; ++j)
            std::copy_n(data_.data() + j * rows_, r, b.data_.data() + j * r);
        return b;
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Vector kernels

inline double dot(std::span<const double> x, std::span<const double> y) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

/// 2-norm scaled by the largest magnitude so that squares neither overflow
/// nor underflow. Equivariant under power-of-two scaling of x.
inline double norm2(std::span<const double> x) noexcept {
    double amax = 0.0;
    for (double v : x) amax = std::max(amax, std::abs(v));
    if (amax == 0.0 || !std::isfinite(amax)) return amax;
    const double inv = 1.0 / amax;
    double ssq = 0.0;
    for (double v : x) {
        const double t = v * inv;
        ssq += t * t;
    }
    return amax * std::sqrt(ssq);
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(double alpha, std::span<double> x) noexcept {
    for (double& v : x) v *= alpha;
}

inline Vector subtract(std::span<const double> x, std::span<const double> y) {
    Vector d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
    return d;
}

// ---------------------------------------------------------------------------
// Matrix kernels

inline double frobenius_norm(const DenseMatrix& a) noexcept { return norm2(a.data()); }

/// y = A x
inline Vector matvec(const DenseMatrix& a, std::span<const double> x) {
    if (x.size() != a.cols()) throw DimensionError("matvec: x length != cols");
    Vector y(a.rows(), 0.0);
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const double xj = x[j];
        if (xj == 0.0) continue;
        const auto c = a.col(j);
        for (std::size_t i = 0; i < a.rows(); ++i) y[i] += c[i] * xj;
    }
    return y;
}

/// y = A^T x
inline Vector matvec_transpose(const DenseMatrix& a, std::span<const double> x) {
    if (x.size() != a.rows()) throw DimensionError("matvec_transpose: x length != rows");
    Vector y(a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] = dot(a.col(j), x);
    return y;
}

/// C = A B, conventional j-k-i loop order.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        auto cj = c.col(j);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double bkj = b(k, j);
            if (bkj == 0.0) continue;
            axpy(bkj, a.col(k), cj);
        }
    }
    return c;
}

/// C = A^T B
inline DenseMatrix matmul_transpose_left(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) throw DimensionError("matmul_transpose_left: row counts differ");
    DenseMatrix c(a.cols(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j)
        for (std::size_t i = 0; i < a.cols(); ++i) c(i, j) = dot(a.col(i), b.col(j));
    return c;
}

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b, double beta = 1.0) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("add: shapes differ");
    DenseMatrix c = a;
    axpy(beta, b.data(), c.data());
    return c;
}

/// Columns [first, first + count) of A.
inline DenseMatrix columns(const DenseMatrix& a, std::size_t first, std::size_t count) {
    DenseMatrix c(a.rows(), count);
    for (std::size_t j = 0; j < count; ++j) std::ranges::copy(a.col(first + j), c.col(j).begin());
    return c;
}

/// [A, v] with v appended as a last column.
inline DenseMatrix append_column(const DenseMatrix& a, std::span<const double> v) {
    if (v.size() != a.rows()) throw DimensionError("append_column: length mismatch");
    std::vector<double> data(a.storage());
    data.insert(data.end(), v.begin(), v.end());
    return DenseMatrix(a.rows(), a.cols() + 1, std::move(data));
}

/// || A^T A - I ||_F, the orthonormality defect of the columns.
inline double orthonormality_defect(const DenseMatrix& q) {
    DenseMatrix g = matmul_transpose_left(q, q);
    for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
    return frobenius_norm(g);
}

} // namespace sketchls
