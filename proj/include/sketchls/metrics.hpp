#pragma once

// Accuracy measures for a computed LS solution x of min ||A x - b||_2.

#include <cmath>
#include <span>
#include <stdexcept>

#include "svd.hpp"

namespace sketchls {

inline Vector residual(const DenseMatrix& a, std::span<const double> b, std::span<const double> x) {
    if (b.size() != a.rows() || x.size() != a.cols()) throw DimensionError("residual: shape mismatch");
    Vector r = matvec(a, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    return r;
}

/// ||A x - b||_2 / ||b||_2
inline double relative_residual(const DenseMatrix& a, std::span<const double> b,
                                std::span<const double> x) {
    const double bn = norm2(b);
    if (bn == 0.0) throw std::invalid_argument("relative_residual: b is zero");
    return norm2(residual(a, b, x)) / bn;
}

/// ||x - x*||_2 / ||x*||_2
inline double forward_error(std::span<const double> x, std::span<const double> xstar) {
    if (x.size() != xstar.size()) throw DimensionError("forward_error: length mismatch");
    const double xn = norm2(xstar);
    if (xn == 0.0) throw std::invalid_argument("forward_error: x* is zero");
    return norm2(subtract(x, xstar)) / xn;
}

/// Forward error a backward stable solver is expected to reach:
/// kappa u (1 + kappa ||e||_2).
inline double reference_forward_error(double kappa, double noise_norm) noexcept {
    return kappa * unit_roundoff * (1.0 + kappa * noise_norm);
}

/// Feasible-point part of the optimal backward error, ||r|| / sqrt(1 + ||x||^2).
/// Attained by dA = r x^T / (1 + ||x||^2), db = -r / (1 + ||x||^2).
inline double backward_error_rank_one_term(double rnorm, double xnorm) noexcept {
    if (rnorm == 0.0) return 0.0;
    return rnorm / detail::lapy2(1.0, xnorm);
}

namespace detail {

// sigma_min of [C, eta1 (I - t t^T / ||t||^2)] for C (k x n), t (k).
inline double sigma_min_augmented(const DenseMatrix& c, std::span<const double> t, double eta1) {
    const std::size_t k = c.rows(), n = c.cols();
    const double tt = dot(t, t);
    // Transposed layout: (n + k) x k, tall.
    DenseMatrix kt(n + k, k);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < n; ++i) kt(i, j) = c(j, i);
        for (std::size_t i = 0; i < k; ++i) {
            const double proj = tt > 0.0 ? t[i] * t[j] / tt : 0.0;
            kt(n + i, j) = eta1 * ((i == j ? 1.0 : 0.0) - proj);
        }
    }
    const auto s = singular_values(kt);
    return s.empty() ? 0.0 : s.back();
}

} // namespace detail

/// Optimal normwise backward error
///   eta_F(x) = min ||[dA, db]||_F  s.t. x solves min ||(A + dA) y - (b + db)||,
/// via the Walden-Karlson-Sun formula
///   eta_F = min(eta1, sigma_min([A, eta1 (I - r r^T / ||r||^2)])),
///   eta1 = ||r|| / sqrt(1 + ||x||^2),  r = b - A x.
/// The m x (m + n) matrix is not formed: with [A, r] = W T (W m x (n+1)),
/// the m x m Gram matrix equals eta1^2 I on range(W)^perp and is reduced to
/// (n+1) x (n+1) on range(W), where A -> T(:, 0:n) and r -> T(:, n).
inline double optimal_backward_error(const DenseMatrix& a, std::span<const double> b,
                                     std::span<const double> x) {
    const std::size_t m = a.rows(), n = a.cols();
    const Vector r = residual(a, b, x);
    const double rn = norm2(r);
    const double eta1 = backward_error_rank_one_term(rn, norm2(x));
    if (eta1 == 0.0) return 0.0;

    double smin;
    if (m >= n + 1) {
        const QrFactors f = householder_qr(append_column(a, r));
        DenseMatrix c(n + 1, n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i <= j; ++i) c(i, j) = f.r(i, j);
        Vector t(n + 1);
        for (std::size_t i = 0; i <= n; ++i) t[i] = f.r(i, n);
        smin = detail::sigma_min_augmented(c, t, eta1);
    } else {
        smin = detail::sigma_min_augmented(a, r, eta1);
    }
    return std::min(eta1, smin);
}

/// Same quantity from the explicit m x (m + n) matrix; O(m^3), small m only.
inline double optimal_backward_error_direct(const DenseMatrix& a, std::span<const double> b,
                                            std::span<const double> x) {
    const Vector r = residual(a, b, x);
    const double eta1 = backward_error_rank_one_term(norm2(r), norm2(x));
    if (eta1 == 0.0) return 0.0;
    return std::min(eta1, detail::sigma_min_augmented(a, r, eta1));
}

} // namespace sketchls
