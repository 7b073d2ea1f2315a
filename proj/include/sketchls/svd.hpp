#pragma once

// One-sided (Hestenes) Jacobi SVD applied to the R factor of a Householder
// QR. Jacobi on R computes the singular values of R to high relative accuracy,
// so the overall error is dominated by the QR step (absolute, ~ n u ||A||_2).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "qr.hpp"

namespace sketchls {

struct SvdFactors {
    DenseMatrix u;             ///< m x n, orthonormal columns
    std::vector<double> sigma; ///< nonincreasing, nonnegative
    DenseMatrix v;             ///< n x n, orthogonal
};

namespace detail {

struct JacobiResult {
    DenseMatrix w;  // columns mutually orthogonal; norms are the singular values
    DenseMatrix v;  // accumulated rotations (empty unless requested)
};

inline JacobiResult one_sided_jacobi(DenseMatrix w, bool accumulate_v, int max_sweeps = 80) {
    const std::size_t n = w.cols();
    DenseMatrix v = accumulate_v ? DenseMatrix::identity(n) : DenseMatrix();
    const double tol = std::max<double>(static_cast<double>(n), 1.0) * unit_roundoff;

    double worst = 0.0;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        worst = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                auto wp = w.col(p);
                auto wq = w.col(q);
                const double alpha = dot(wp, wp);
                const double beta = dot(wq, wq);
                const double gam = dot(wp, wq);
                if (alpha == 0.0 || beta == 0.0 || gam == 0.0) continue;
                const double off = std::abs(gam) / std::sqrt(alpha * beta);
                worst = std::max(worst, off);
                if (off <= tol) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gam);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < w.rows(); ++i) {
                    const double a = wp[i], b = wq[i];
                    wp[i] = c * a - s * b;
                    wq[i] = s * a + c * b;
                }
                if (accumulate_v) {
                    auto vp = v.col(p);
                    auto vq = v.col(q);
                    for (std::size_t i = 0; i < n; ++i) {
                        const double a = vp[i], b = vq[i];
                        vp[i] = c * a - s * b;
                        vq[i] = s * a + c * b;
                    }
                }
            }
        }
        if (!rotated) return {std::move(w), std::move(v)};
    }
    throw ConvergenceError("svd: Jacobi sweeps did not converge; attained off-diagonal " +
                               std::to_string(worst),
                           worst);
}

inline DenseMatrix upper_of_qr(const DenseMatrix& a) {
    return householder_qr(a).r;
}

} // namespace detail

/// Singular values of A (any shape), nonincreasing.
inline std::vector<double> singular_values(const DenseMatrix& a) {
    if (a.rows() < a.cols()) return singular_values(a.transpose());
    const std::size_t n = a.cols();
    if (n == 0) return {};
    auto jac = detail::one_sided_jacobi(detail::upper_of_qr(a), false);
    std::vector<double> s(n);
    for (std::size_t j = 0; j < n; ++j) s[j] = norm2(jac.w.col(j));
    std::ranges::sort(s, std::greater<>());
    return s;
}

inline SvdFactors svd(const DenseMatrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    if (m < n) throw DimensionError("svd: requires rows >= cols");
    const QrFactors qr = householder_qr(a);
    auto jac = detail::one_sided_jacobi(qr.r, true);

    std::vector<double> sig(n);
    for (std::size_t j = 0; j < n; ++j) sig[j] = norm2(jac.w.col(j));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::ranges::stable_sort(order, [&](std::size_t x, std::size_t y) { return sig[x] > sig[y]; });

    SvdFactors f;
    f.sigma.resize(n);
    DenseMatrix ur(n, n);
    f.v = DenseMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        f.sigma[k] = sig[j];
        std::ranges::copy(jac.v.col(j), f.v.col(k).begin());
        auto dst = ur.col(k);
        std::ranges::copy(jac.w.col(j), dst.begin());
        if (sig[j] > 0.0) scale(1.0 / sig[j], dst);
    }

    // Exactly-zero singular values leave zero columns; complete them to an
    // orthonormal set with Gram-Schmidt against the standard basis.
    for (std::size_t k = 0; k < n; ++k) {
        if (f.sigma[k] > 0.0) continue;
        for (std::size_t e = 0; e < n; ++e) {
            auto col = ur.col(k);
            std::fill(col.begin(), col.end(), 0.0);
            col[e] = 1.0;
            for (int pass = 0; pass < 2; ++pass)
                for (std::size_t p = 0; p < n; ++p) {
                    if (p == k || (f.sigma[p] == 0.0 && p > k)) continue;
                    axpy(-dot(ur.col(p), col), ur.col(p), col);
                }
            const double nrm = norm2(col);
            if (nrm > 0.5) {
                scale(1.0 / nrm, col);
                break;
            }
        }
    }

    // U = Q_thin * U_R
    f.u = DenseMatrix(m, n);
    for (std::size_t k = 0; k < n; ++k) {
        auto uk = f.u.col(k);
        std::ranges::copy(ur.col(k), uk.begin());
        qr.apply_q(uk);
    }
    return f;
}

/// sigma_max / sigma_min; +inf for a numerically singular matrix.
inline double condition_number(const DenseMatrix& a) {
    const auto s = singular_values(a);
    if (s.empty()) return 1.0;
    return s.back() == 0.0 ? std::numeric_limits<double>::infinity() : s.front() / s.back();
}

inline double spectral_norm(const DenseMatrix& a) {
    const auto s = singular_values(a);
    return s.empty() ? 0.0 : s.front();
}

} // namespace sketchls
