#pragma once

// Seeded test problems: random A = U diag(sigma) V^T with log-spaced spectrum
// and noise orthogonal to range(A); Kahan and scaled Vandermonde matrices.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "random.hpp"

namespace sketchls {

struct LsProblem {
    DenseMatrix a;
    Vector b;
    std::optional<Vector> xstar;
    std::optional<Vector> e;
    std::optional<double> kappa_by_construction;
    std::optional<DenseMatrix> qa_basis;   ///< orthonormal basis of range(A)
    std::string generator = "custom";
    std::uint64_t seed = 0;
    double noise_norm = 0.0;

    std::size_t rows() const noexcept { return a.rows(); }
    std::size_t cols() const noexcept { return a.cols(); }
};

/// n values from 1 down to 1/kappa, geometrically spaced, both ends included.
inline Vector log_spaced_spectrum(std::size_t n, double kappa) {
    Vector s(n, 1.0);
    if (n < 2) return s;
    const double lk = std::log10(kappa);
    for (std::size_t j = 0; j < n; ++j)
        s[j] = std::pow(10.0, -lk * static_cast<double>(j) / static_cast<double>(n - 1));
    s[n - 1] = 1.0 / kappa;
    return s;
}

/// A = U_n diag(sigma) V^T with Haar U_n (m x n) and V (n x n).
inline DenseMatrix matrix_with_spectrum(std::size_t m, std::size_t n, std::span<const double> sigma,
                                        Rng& rng, DenseMatrix* u_out = nullptr) {
    if (m < n) throw DimensionError("matrix_with_spectrum: requires m >= n");
    DenseMatrix u = haar_orthonormal(m, n, rng);
    const DenseMatrix v = haar_orthonormal(n, n, rng);
    DenseMatrix us = u;
    for (std::size_t j = 0; j < n; ++j) scale(sigma[j], us.col(j));
    DenseMatrix a = matmul(us, v.transpose());
    if (u_out) *u_out = std::move(u);
    return a;
}

inline LsProblem gen_random_ls(std::size_t m, std::size_t n, double kappa, double noise_norm,
                               std::uint64_t seed) {
    if (n < 1 || m <= n) throw DimensionError("gen_random_ls: requires m > n >= 1");
    if (!(kappa >= 1.0)) throw std::invalid_argument("gen_random_ls: kappa must be >= 1");
    if (!(noise_norm >= 0.0)) throw std::invalid_argument("gen_random_ls: noise_norm must be >= 0");

    Rng rng = make_rng(seed, Stream::problem);
    LsProblem p;
    DenseMatrix u;
    const Vector sigma = log_spaced_spectrum(n, kappa);
    p.a = matrix_with_spectrum(m, n, sigma, rng, &u);
    p.xstar = gaussian_vector(n, rng);

    // e = noise * normalize((I - U U^T) g), projected twice.
    Vector e = gaussian_vector(m, rng);
    for (int pass = 0; pass < 2; ++pass) {
        const Vector c = matvec_transpose(u, e);
        const Vector uc = matvec(u, c);
        for (std::size_t i = 0; i < m; ++i) e[i] -= uc[i];
    }
    const double en = norm2(e);
    for (double& v : e) v = noise_norm == 0.0 ? 0.0 : v * (noise_norm / en);

    p.b = matvec(p.a, *p.xstar);
    for (std::size_t i = 0; i < m; ++i) p.b[i] += e[i];
    p.e = std::move(e);
    p.kappa_by_construction = kappa;
    p.qa_basis = std::move(u);
    p.generator = "random";
    p.seed = seed;
    p.noise_norm = noise_norm;
    return p;
}

/// Upper-trapezoidal Kahan matrix: row i (i < n) is s^i (0,...,0, 1, -c, ..., -c)
/// with s = sin(theta), c = cos(theta); rows n..m-1 are zero. No diagonal
/// perturbation.
inline DenseMatrix kahan_matrix(std::size_t m, std::size_t n, double theta) {
    if (m < n) throw DimensionError("kahan_matrix: requires m >= n");
    const double s = std::sin(theta), c = std::cos(theta);
    DenseMatrix k(m, n);
    double si = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        k(i, i) = si;
        for (std::size_t j = i + 1; j < n; ++j) k(i, j) = -c * si;
        si *= s;
    }
    return k;
}

/// Column scales 2^{-10 j}, j = 0..n-1.
inline Vector default_vandermonde_scales(std::size_t n) {
    Vector sc(n);
    for (std::size_t j = 0; j < n; ++j) sc[j] = std::ldexp(1.0, -10 * static_cast<int>(j));
    return sc;
}

/// Entries t_i^j * col_scales[j], t_i equally spaced on [-1, 1] inclusive.
inline DenseMatrix vandermonde_scaled(std::size_t m, std::size_t n, std::span<const double> col_scales) {
    if (m < n) throw DimensionError("vandermonde_scaled: requires m >= n");
    if (col_scales.size() != n) throw DimensionError("vandermonde_scaled: need one scale per column");
    DenseMatrix v(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const double t = m == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(m - 1);
        double p = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            v(i, j) = p * col_scales[j];
            p *= t;
        }
    }
    return v;
}

/// Column j multiplied by 2^{exponents[j]} (exact in binary floating point).
inline DenseMatrix column_rescale(const DenseMatrix& a, std::span<const int> exponents) {
    if (exponents.size() != a.cols()) throw DimensionError("column_rescale: need one exponent per column");
    DenseMatrix out = a;
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (double& v : out.col(j)) {
            const double w = std::ldexp(v, exponents[j]);
            if (std::isinf(w) && std::isfinite(v))
                throw std::overflow_error("column_rescale: column " + std::to_string(j) + " overflows");
            v = w;
        }
    return out;
}

/// Consistent problem b = A x* with Gaussian x* (used for Kahan / Vandermonde).
inline LsProblem consistent_problem(DenseMatrix a, std::uint64_t seed, std::string generator) {
    Rng rng = make_rng(seed, Stream::problem);
    LsProblem p;
    p.xstar = gaussian_vector(a.cols(), rng);
    p.b = matvec(a, *p.xstar);
    p.e = Vector(a.rows(), 0.0);
    p.a = std::move(a);
    p.generator = std::move(generator);
    p.seed = seed;
    return p;
}

} // namespace sketchls
