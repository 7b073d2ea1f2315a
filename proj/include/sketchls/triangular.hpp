#pragma once

#include <cstdio>
#include <span>
#include <string>

#include "dense.hpp"

namespace sketchls {

namespace detail {

inline void check_triangular(const DenseMatrix& r, const char* who) {
    if (r.rows() != r.cols()) throw DimensionError(std::string(who) + ": R must be square");
    for (std::size_t i = 0; i < r.rows(); ++i)
        if (r(i, i) == 0.0)
            throw SingularError(std::string(who) + ": zero diagonal entry at " + std::to_string(i));
}

} // namespace detail

/// Solves R x = z by column-oriented back substitution.
inline Vector solve_upper_triangular(const DenseMatrix& r, std::span<const double> z) {
    detail::check_triangular(r, "solve_upper_triangular");
    if (z.size() != r.rows()) throw DimensionError("solve_upper_triangular: length mismatch");
    Vector x(z.begin(), z.end());
    for (std::size_t j = r.cols(); j-- > 0;) {
        x[j] /= r(j, j);
        const double xj = x[j];
        const auto c = r.col(j);
        for (std::size_t i = 0; i < j; ++i) x[i] -= xj * c[i];
    }
    return x;
}

/// Solves R^T x = a by forward substitution. `a` is typically a row of A, and
/// x the matching row of A R^{-1}.
inline Vector solve_lower_from_rT(const DenseMatrix& r, std::span<const double> a) {
    detail::check_triangular(r, "solve_lower_from_rT");
    if (a.size() != r.rows()) throw DimensionError("solve_lower_from_rT: length mismatch");
    const std::size_t n = r.rows();
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = r.col(i);
        double s = 0.0;
        for (std::size_t k = 0; k < i; ++k) s += c[k] * x[k];
        x[i] = (a[i] - s) / r(i, i);
    }
    return x;
}

/// Y = A R^{-1}, i.e. solve_lower_from_rT on every row of A. Sweeps columns so
/// that memory access stays contiguous; the per-row arithmetic is performed in
/// exactly the same order, so each row of Y is bitwise equal to the row solve.
inline DenseMatrix right_divide_upper(const DenseMatrix& a, const DenseMatrix& r) {
    detail::check_triangular(r, "right_divide_upper");
    if (a.cols() != r.rows()) throw DimensionError("right_divide_upper: A.cols != R.rows");
    const std::size_t m = a.rows(), n = a.cols();
    DenseMatrix y(m, n);
    Vector s(m);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(s.begin(), s.end(), 0.0);
        for (std::size_t k = 0; k < j; ++k) {
            const double rkj = r(k, j);
            const auto yk = y.col(k);
            for (std::size_t i = 0; i < m; ++i) s[i] += rkj * yk[i];
        }
        const double d = r(j, j);
        const auto aj = a.col(j);
        auto yj = y.col(j);
        for (std::size_t i = 0; i < m; ++i) yj[i] = (aj[i] - s[i]) / d;
    }
    return y;
}

} // namespace sketchls
