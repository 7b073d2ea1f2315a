#pragma once

// Brute-force optimal backward error for tiny problems (validation only).
//
// For a fixed dA the cheapest db making x a LS solution of (A + dA, b + db)
// is the orthogonal projection db = -P_B (b - B x), B = A + dA. So
//   eta_F(x)^2 = min_dA ||dA||_F^2 + ||P_B (b - B x)||^2,
// an unconstrained problem in m n variables, minimized here by BFGS with
// central-difference gradients from several starting points.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "metrics.hpp"
#include "random.hpp"
#include "triangular.hpp"

namespace sketchls {

struct OracleResult {
    double value = 0.0;     ///< best ||[dA, db]||_F found (an upper bound on eta_F)
    bool converged = false; ///< gradient test met on the best run
};

namespace detail {

inline double oracle_objective(const DenseMatrix& a, std::span<const double> b,
                               std::span<const double> x, std::span<const double> da) {
    const std::size_t m = a.rows(), n = a.cols();
    DenseMatrix bm = a;
    for (std::size_t i = 0; i < m * n; ++i) bm.data()[i] += da[i];
    const Vector r = residual(bm, b, x);
    const DenseMatrix q = householder_qr(bm).form_q();
    const Vector qtr = matvec_transpose(q, r);
    return dot(da, da) + dot(qtr, qtr);
}

} // namespace detail

inline OracleResult backward_error_oracle(const DenseMatrix& a, std::span<const double> b,
                                          std::span<const double> x, int starts = 8,
                                          std::uint64_t seed = 12345) {
    const std::size_t m = a.rows(), n = a.cols();
    if (m > 10 || n > 3 || m < n) throw DimensionError("backward_error_oracle: needs n <= m <= 10, n <= 3");
    const std::size_t dim = m * n;
    auto f = [&](std::span<const double> da) { return detail::oracle_objective(a, b, x, da); };

    const Vector r = residual(a, b, x);
    const double rn = norm2(r);
    const double xn2 = dot(x, x);
    const double scale0 = std::max(rn, 1e-300);

    auto gradient = [&](std::vector<double>& p, std::vector<double>& g) {
        const double h = 1e-6 * std::max(norm2(p), scale0);
        for (std::size_t i = 0; i < dim; ++i) {
            const double save = p[i];
            p[i] = save + h;
            const double fp = f(p);
            p[i] = save - h;
            const double fm = f(p);
            p[i] = save;
            g[i] = (fp - fm) / (2.0 * h);
        }
    };

    // Starting points: dA = 0; the rank-one feasible point r x^T / (1 + ||x||^2);
    // random perturbations of size ||r|| / ||x||.
    std::vector<std::vector<double>> inits;
    inits.emplace_back(dim, 0.0);
    {
        std::vector<double> p(dim);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < m; ++i) p[i + j * m] = r[i] * x[j] / (1.0 + xn2);
        inits.push_back(std::move(p));
    }
    Rng rng(seed);
    for (int k = 0; k < starts; ++k) {
        std::vector<double> p(dim);
        fill_gaussian(p, rng, scale0 / std::max(std::sqrt(xn2 * static_cast<double>(m)), 1.0));
        inits.push_back(std::move(p));
    }

    OracleResult best{std::numeric_limits<double>::infinity(), false};
    for (auto& p : inits) {
        double fx = f(p);
        std::vector<double> g(dim), gn(dim), s(dim), y(dim), dir(dim), trial(dim);
        gradient(p, g);
        const double g0 = std::max(norm2(g), 1e-300);
        // Inverse Hessian approximation, row-major dim x dim.
        std::vector<double> h(dim * dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) h[i * dim + i] = 0.5;
        bool conv = false;
        for (int it = 0; it < 400; ++it) {
            if (norm2(g) <= 1e-7 * g0 || fx == 0.0) {
                conv = true;
                break;
            }
            for (std::size_t i = 0; i < dim; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < dim; ++j) acc += h[i * dim + j] * g[j];
                dir[i] = -acc;
            }
            double slope = dot(dir, g);
            if (slope >= 0.0) {  // reset to steepest descent
                std::fill(h.begin(), h.end(), 0.0);
                for (std::size_t i = 0; i < dim; ++i) {
                    h[i * dim + i] = 0.5;
                    dir[i] = -0.5 * g[i];
                }
                slope = dot(dir, g);
            }
            double step = 1.0, ft = fx;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                for (std::size_t i = 0; i < dim; ++i) trial[i] = p[i] + step * dir[i];
                ft = f(trial);
                if (ft <= fx + 1e-4 * step * slope) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) {
                conv = true;  // no further decrease representable
                break;
            }
            for (std::size_t i = 0; i < dim; ++i) s[i] = trial[i] - p[i];
            p = trial;
            fx = ft;
            gradient(p, gn);
            for (std::size_t i = 0; i < dim; ++i) y[i] = gn[i] - g[i];
            g = gn;
            const double sy = dot(s, y);
            if (sy > 0.0) {
                // BFGS inverse update.
                std::vector<double> hy(dim);
                for (std::size_t i = 0; i < dim; ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < dim; ++j) acc += h[i * dim + j] * y[j];
                    hy[i] = acc;
                }
                const double yhy = dot(y, hy);
                for (std::size_t i = 0; i < dim; ++i)
                    for (std::size_t j = 0; j < dim; ++j)
                        h[i * dim + j] += ((sy + yhy) * s[i] * s[j]) / (sy * sy) -
                                          (hy[i] * s[j] + s[i] * hy[j]) / sy;
            }
        }
        const double val = std::sqrt(std::max(fx, 0.0));
        if (val < best.value) best = {val, conv};
    }
    return best;
}

struct OracleAgreement {
    std::size_t instances = 0;
    double worst_relative_gap = 0.0;  ///< max |closed form - oracle| / closed form
    bool oracle_converged = true;     ///< every oracle run met its gradient test
};

/// Cross-checks optimal_backward_error against the oracle on random tiny
/// problems: m in {4, 6, 8}, n in {1, 2, 3}, x = LS solution plus a random
/// perturbation of relative size 1e-1 or 1e-3.
inline OracleAgreement oracle_agreement(std::size_t instances, std::uint64_t seed) {
    static constexpr std::size_t ms[] = {4, 6, 8};
    Rng rng(seed);
    OracleAgreement out;
    out.instances = instances;
    for (std::size_t t = 0; t < instances; ++t) {
        const std::size_t m = ms[t % 3], n = 1 + (t / 3) % 3;
        const DenseMatrix a = gaussian_matrix(m, n, rng);
        const Vector b = gaussian_vector(m, rng);
        const QrFactors f = householder_qr(a);
        Vector qtb = b;
        f.apply_qt(qtb);
        Vector x = solve_upper_triangular(f.r, std::span<const double>(qtb).first(n));
        const double size = (t % 2 == 0 ? 1e-1 : 1e-3) * norm2(x) / std::sqrt(static_cast<double>(n));
        for (double& v : x) v += size * std::normal_distribution<double>()(rng);

        const double closed = optimal_backward_error(a, b, x);
        const OracleResult o = backward_error_oracle(a, b, x);
        out.worst_relative_gap = std::max(out.worst_relative_gap, std::abs(closed - o.value) / closed);
        out.oracle_converged = out.oracle_converged && o.converged;
    }
    return out;
}

} // namespace sketchls
