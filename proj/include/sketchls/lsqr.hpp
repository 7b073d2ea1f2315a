#pragma once

// LSQR (Paige & Saunders, 1982) over an abstract linear operator, with an
// optional right preconditioner given by solves with an upper-triangular R.
//
// With a preconditioner the iteration runs on Op = A R^{-1} but the iterate is
// kept in the original variables, like MATLAB's lsqr: each step computes
// z = R^{-1} v by a fresh back substitution and uses it both in A z and in the
// search-direction update d <- z - (theta/rho) d, x <- x + (phi/rho) d.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qr.hpp"
#include "triangular.hpp"

namespace sketchls {

struct LinearOperator {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::function<Vector(std::span<const double>)> apply;            // Op v
    std::function<Vector(std::span<const double>)> apply_transpose;  // Op^T w
};

/// Operator view of a dense matrix. The matrix must outlive the operator.
inline LinearOperator dense_operator(const DenseMatrix& a) {
    const DenseMatrix* p = &a;
    return {a.rows(), a.cols(),
            [p](std::span<const double> v) { return matvec(*p, v); },
            [p](std::span<const double> w) { return matvec_transpose(*p, w); }};
}

/// Right preconditioner P = R^{-1}: solve(v) = R^{-1} v, solve_transpose(v) = R^{-T} v.
struct RightPreconditioner {
    std::function<Vector(std::span<const double>)> solve;
    std::function<Vector(std::span<const double>)> solve_transpose;
};

/// R must outlive the preconditioner.
inline RightPreconditioner upper_triangular_preconditioner(const DenseMatrix& r) {
    detail::check_triangular(r, "upper_triangular_preconditioner");
    const DenseMatrix* p = &r;
    return {[p](std::span<const double> v) { return solve_upper_triangular(*p, v); },
            [p](std::span<const double> v) { return solve_lower_from_rT(*p, v); }};
}

/// A R^{-1} as an operator; every application performs fresh substitutions.
/// Both matrices must outlive the operator.
inline LinearOperator right_preconditioned_operator(const DenseMatrix& a, const DenseMatrix& r) {
    detail::check_triangular(r, "right_preconditioned_operator");
    if (a.cols() != r.rows()) throw DimensionError("right_preconditioned_operator: A.cols != R.rows");
    const DenseMatrix* pa = &a;
    const DenseMatrix* pr = &r;
    return {a.rows(), a.cols(),
            [pa, pr](std::span<const double> v) { return matvec(*pa, solve_upper_triangular(*pr, v)); },
            [pa, pr](std::span<const double> w) {
                return solve_lower_from_rT(*pr, matvec_transpose(*pa, w));
            }};
}

struct LsqrConfig {
    double tol = 1e-14;
    /// 0 selects max(100, 4 n).
    std::size_t maxit = 0;
    /// Stop early when the best stopping-test value has not halved over this
    /// many iterations; 0 disables the check.
    std::size_t stagnation_window = 0;

    std::size_t iteration_cap(std::size_t n) const noexcept {
        return maxit != 0 ? maxit : std::max<std::size_t>(100, 4 * n);
    }
};

struct LsqrRecord {
    std::size_t iteration = 0;
    double residual_estimate = 0.0;         ///< ||b - Op x||
    double normal_residual_estimate = 0.0;  ///< ||Op^T (b - Op x)||
    double anorm_estimate = 0.0;            ///< Frobenius-type estimate of ||Op||
};

struct LsqrHistory {
    std::vector<LsqrRecord> records;  ///< records[0] is the initial iterate x = 0
};

enum class LsqrStop { zero_rhs, residual_tol, normal_tol, maxit, stagnation };

inline const char* to_string(LsqrStop s) noexcept {
    switch (s) {
    case LsqrStop::zero_rhs: return "zero_rhs";
    case LsqrStop::residual_tol: return "residual_tol";
    case LsqrStop::normal_tol: return "normal_tol";
    case LsqrStop::maxit: return "maxit";
    case LsqrStop::stagnation: return "stagnation";
    }
    return "?";
}

struct LsqrResult {
    Vector x;
    LsqrHistory history;
    bool converged = false;
    LsqrStop stop = LsqrStop::maxit;
    std::size_t iterations() const noexcept { return history.records.size() - 1; }
};

/// Called with (iteration, x) for the initial iterate and after every step.
using LsqrObserver = std::function<void(std::size_t, std::span<const double>)>;

inline LsqrResult lsqr_solve(const LinearOperator& op, std::span<const double> b,
                             const LsqrConfig& cfg = {}, const LsqrObserver& observer = {},
                             const RightPreconditioner* precond = nullptr) {
    if (b.size() != op.rows) throw DimensionError("lsqr_solve: b length != operator rows");
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("lsqr_solve: tol must be positive");

    const std::size_t n = op.cols;
    const std::size_t cap = cfg.iteration_cap(n);

    LsqrResult res;
    res.x.assign(n, 0.0);
    auto notify = [&](std::size_t k) {
        if (observer) observer(k, res.x);
    };

    Vector u(b.begin(), b.end());
    double beta = norm2(u);
    const double bnorm = beta;
    if (beta == 0.0) {
        res.history.records.push_back({0, 0.0, 0.0, 0.0});
        res.converged = true;
        res.stop = LsqrStop::zero_rhs;
        notify(0);
        return res;
    }
    scale(1.0 / beta, u);

    auto op_t = [&](std::span<const double> w) {
        Vector t = op.apply_transpose(w);
        return precond ? precond->solve_transpose(t) : t;
    };
    auto to_x = [&](std::span<const double> v) {
        return precond ? precond->solve(v) : Vector(v.begin(), v.end());
    };

    Vector v = op_t(u);
    double alpha = norm2(v);
    if (alpha > 0.0) scale(1.0 / alpha, v);

    Vector z = to_x(v);   // R^{-1} v (or v)
    Vector d = z;         // search direction in x-space
    double phibar = beta;
    double rhobar = alpha;
    double anorm = 0.0;

    res.history.records.push_back({0, beta, alpha * beta, 0.0});
    notify(0);
    if (alpha == 0.0) {
        // A^T b = 0: x = 0 already solves the LS problem.
        res.converged = true;
        res.stop = LsqrStop::normal_tol;
        return res;
    }

    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_trace;

    for (std::size_t itn = 1; itn <= cap; ++itn) {
        // Bidiagonalization step.
        Vector av = op.apply(z);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = av[i] - alpha * u[i];
        beta = norm2(u);
        anorm = detail::lapy2(anorm, alpha);
        if (beta > 0.0) {
            scale(1.0 / beta, u);
            anorm = detail::lapy2(anorm, beta);
            Vector atu = op_t(u);
            for (std::size_t i = 0; i < n; ++i) v[i] = atu[i] - beta * v[i];
            alpha = norm2(v);
            if (alpha > 0.0) scale(1.0 / alpha, v);
        } else {
            alpha = 0.0;
        }

        // Plane rotation eliminating the subdiagonal beta.
        const double rho = detail::lapy2(rhobar, beta);
        const double c = rhobar / rho;
        const double s = beta / rho;
        const double theta = s * alpha;
        rhobar = -c * alpha;
        const double phi = c * phibar;
        phibar = s * phibar;

        axpy(phi / rho, d, res.x);
        z = to_x(v);
        for (std::size_t i = 0; i < n; ++i) d[i] = z[i] - (theta / rho) * d[i];

        const double rnorm = phibar;
        const double arnorm = phibar * alpha * std::abs(c);
        res.history.records.push_back({itn, rnorm, arnorm, anorm});
        notify(itn);

        const double test1 = rnorm / bnorm;
        const double test2 = (rnorm == 0.0 || anorm == 0.0) ? 0.0 : arnorm / (anorm * rnorm);
        if (test1 <= cfg.tol) {
            res.converged = true;
            res.stop = LsqrStop::residual_tol;
            return res;
        }
        if (test2 <= cfg.tol) {
            res.converged = true;
            res.stop = LsqrStop::normal_tol;
            return res;
        }

        if (cfg.stagnation_window > 0) {
            best = std::min(best, std::min(test1, test2));
            best_trace.push_back(best);
            const std::size_t w = cfg.stagnation_window;
            if (best_trace.size() > w && best > 0.5 * best_trace[best_trace.size() - 1 - w]) {
                res.stop = LsqrStop::stagnation;
                return res;
            }
        }
    }
    res.stop = LsqrStop::maxit;
    return res;
}

} // namespace sketchls
