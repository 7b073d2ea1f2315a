#pragma once

// Unblocked Householder QR with LAPACK-style reflectors H = I - tau v v^T,
// v(0) = 1. The reflector construction only uses scale-equivariant
// operations, so scaling a column of A by a power of two scales the matching
// column of R by the same power and leaves the reflectors untouched.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dense.hpp"

namespace sketchls {

namespace detail {

/// sqrt(a^2 + b^2) as in LAPACK dlapy2.
inline double lapy2(double a, double b) noexcept {
    const double x = std::abs(a), y = std::abs(b);
    const double w = std::max(x, y), z = std::min(x, y);
    if (z == 0.0) return w;
    const double q = z / w;
    return w * std::sqrt(1.0 + q * q);
}

} // namespace detail

struct QrFactors {
    DenseMatrix r;             ///< n x n, exactly upper triangular
    DenseMatrix reflectors;    ///< m x n; column j holds v_j in rows j+1..m-1
    std::vector<double> tau;   ///< length n

    std::size_t rows() const noexcept { return reflectors.rows(); }
    std::size_t cols() const noexcept { return reflectors.cols(); }

    /// x <- Q^T x, with Q the full m x m product H_0 H_1 ... H_{n-1}.
    void apply_qt(std::span<double> x) const {
        if (x.size() != rows()) throw DimensionError("apply_qt: length mismatch");
        for (std::size_t j = 0; j < cols(); ++j) apply_reflector(j, x);
    }

    /// x <- Q x
    void apply_q(std::span<double> x) const {
        if (x.size() != rows()) throw DimensionError("apply_q: length mismatch");
        for (std::size_t j = cols(); j-- > 0;) apply_reflector(j, x);
    }

    /// Thin Q (m x n), built by applying the reflectors to the leading columns of I.
    DenseMatrix form_q() const {
        DenseMatrix q(rows(), cols());
        for (std::size_t j = 0; j < cols(); ++j) {
            q(j, j) = 1.0;
            apply_q(q.col(j));
        }
        return q;
    }

private:
    void apply_reflector(std::size_t j, std::span<double> x) const {
        const double t = tau[j];
        if (t == 0.0) return;
        const auto v = reflectors.col(j);
        double w = x[j];
        for (std::size_t i = j + 1; i < x.size(); ++i) w += v[i] * x[i];
        w *= t;
        x[j] -= w;
        for (std::size_t i = j + 1; i < x.size(); ++i) x[i] -= w * v[i];
    }
};

inline QrFactors householder_qr(const DenseMatrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    if (m < n) throw DimensionError("householder_qr: requires rows >= cols");

    DenseMatrix work = a;
    std::vector<double> tau(n, 0.0);

    for (std::size_t j = 0; j < n; ++j) {
        auto x = work.col(j);
        const double alpha = x[j];
        const double xnorm = norm2(x.subspan(j + 1));
        double beta = alpha;
        if (xnorm != 0.0) {
            beta = -std::copysign(detail::lapy2(alpha, xnorm), alpha);
            tau[j] = (beta - alpha) / beta;
            const double denom = alpha - beta;
            for (std::size_t i = j + 1; i < m; ++i) x[i] /= denom;
        }
        x[j] = beta;

        const double t = tau[j];
        if (t == 0.0) continue;
        for (std::size_t k = j + 1; k < n; ++k) {
            auto c = work.col(k);
            double w = c[j];
            for (std::size_t i = j + 1; i < m; ++i) w += x[i] * c[i];
            w *= t;
            c[j] -= w;
            for (std::size_t i = j + 1; i < m; ++i) c[i] -= w * x[i];
        }
    }

    QrFactors f;
    f.r = DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i <= j; ++i) f.r(i, j) = work(i, j);
    for (std::size_t j = 0; j < n; ++j) {
        auto c = work.col(j);
        std::fill(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(j + 1), 0.0);
    }
    f.reflectors = std::move(work);
    f.tau = std::move(tau);
    return f;
}

/// gamma_k = k u / (1 - k u); +inf once k u >= 1.
inline double gamma(double k) noexcept {
    const double ku = k * unit_roundoff;
    return ku < 1.0 ? ku / (1.0 - ku) : std::numeric_limits<double>::infinity();
}

/// gamma-tilde_k = c k u / (1 - c k u) with the small integer constant c.
inline double gamma_tilde(double k, double c = 10.0) noexcept { return gamma(c * k); }

} // namespace sketchls
