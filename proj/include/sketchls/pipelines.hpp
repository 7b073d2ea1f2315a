#pragma once

// End-to-end least-squares solvers:
//   sketch_and_precondition   LSQR on A with right preconditioner R^{-1}
//   sketch_and_apply          LSQR on the explicitly formed Y = A R^{-1}
//   smoothed_sketch_and_apply sketch_and_apply on A + sigma G / sqrt(m)
//   master_solve              sketch_and_apply, smoothing only on failure
//   hhqr_direct               Householder QR baseline
// R is the triangular factor of a Householder QR of the sketch S A.

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "bounds.hpp"
#include "lsqr.hpp"
#include "metrics.hpp"
#include "sketch.hpp"

namespace sketchls {

enum class SolverKind { sap, saa, smoothed_saa, master, hhqr_direct };

inline const char* to_string(SolverKind k) noexcept {
    switch (k) {
    case SolverKind::sap: return "sap";
    case SolverKind::saa: return "saa";
    case SolverKind::smoothed_saa: return "smoothed";
    case SolverKind::master: return "master";
    case SolverKind::hhqr_direct: return "qr";
    }
    return "?";
}

struct SketchConfig {
    SketchKind kind = SketchKind::srct;
    double oversampling = 8.0;  ///< s = ceil(oversampling * n)
    std::size_t rows = 0;       ///< explicit s; overrides oversampling when nonzero

    std::size_t sketch_rows(std::size_t m, std::size_t n) const {
        const std::size_t s =
            rows != 0 ? rows : static_cast<std::size_t>(std::ceil(oversampling * static_cast<double>(n)));
        if (s <= n || s >= m)
            throw DimensionError("sketch size s=" + std::to_string(s) + " must satisfy n=" + std::to_string(n) +
                                 " < s < m=" + std::to_string(m));
        return s;
    }
};

struct SigmaRule {
    enum class Kind {
        recommended,  ///< 10 ||A||_2 u
        conservative, ///< 52 ||A||_2 k(S) s m sqrt(n) u
        fixed         ///< `value`
    };
    Kind kind = Kind::recommended;
    double value = 0.0;
};

struct SolverConfig {
    SketchConfig sketch;
    LsqrConfig lsqr;
    SigmaRule sigma;
    int norm_power_iterations = 20;          ///< power-method steps for ||A||_2
    std::size_t master_stagnation_window = 20;
};

/// Per-iteration metrics recorded through the LSQR observer. All metrics are
/// measured against the problem handed to the solver.
struct TraceOptions {
    bool enabled = false;
    std::optional<Vector> xstar;
    bool backward_error = false;
    /// Iterations at which the (expensive) backward error is evaluated.
    std::function<bool(std::size_t)> backward_error_schedule = [](std::size_t k) {
        return k <= 20 || k % 5 == 0;
    };
};

struct TracePoint {
    std::size_t iteration = 0;
    double rel_residual = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> fwd_error;
    std::optional<double> backward_error;
};

struct SolveReport {
    Vector x;
    LsqrHistory history;
    bool converged = false;
    LsqrStop stop = LsqrStop::maxit;
    SolverKind solver = SolverKind::saa;
    bool smoothing_applied = false;
    bool smoothing_attempted = false;
    double sigma_used = 0.0;
    std::uint64_t seed = 0;
    double wall_time = 0.0;  ///< seconds, excluding trace-metric evaluation
    std::size_t sketch_rows = 0;
    std::optional<double> kappa_r;  ///< advisory kappa_2(R), master only
    std::vector<TracePoint> trace;
    std::optional<DenseMatrix> smoothed_matrix;  ///< A + sigma G / sqrt(m) when smoothing ran

    std::size_t iterations() const noexcept {
        return history.records.empty() ? 0 : history.records.size() - 1;
    }
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Tracer {
    const DenseMatrix& a;
    std::span<const double> b;
    const TraceOptions& opts;
    std::vector<TracePoint>& out;
    double bnorm;
    double spent = 0.0;

    void record(std::size_t k, std::span<const double> x) {
        if (!opts.enabled) return;
        const auto t0 = Clock::now();
        TracePoint p;
        p.iteration = k;
        if (bnorm > 0.0) p.rel_residual = relative_residual(a, b, x);
        if (opts.xstar) p.fwd_error = forward_error(x, *opts.xstar);
        if (opts.backward_error && opts.backward_error_schedule(k))
            p.backward_error = optimal_backward_error(a, b, x);
        out.push_back(std::move(p));
        spent += seconds_since(t0);
    }
};

inline void check_problem(const DenseMatrix& a, std::span<const double> b) {
    if (b.size() != a.rows()) throw DimensionError("b length != rows of A");
    if (a.rows() <= a.cols()) throw DimensionError("overdetermined problem required (m > n)");
}

inline SketchOperator draw_sketch(const SketchConfig& cfg, std::size_t m, std::size_t n, std::uint64_t seed) {
    Rng rng = make_rng(seed, Stream::sketch);
    return make_sketch(cfg.kind, cfg.sketch_rows(m, n), m, rng);
}

/// R factor of S A; a zero diagonal means the sketch is numerically rank deficient.
inline DenseMatrix sketch_r_factor(const SketchOperator& sk, const DenseMatrix& a) {
    DenseMatrix r = householder_qr(apply_sketch(sk, a)).r;
    for (std::size_t i = 0; i < r.rows(); ++i)
        if (r(i, i) == 0.0)
            throw SingularError("R factor of the sketch S A has a zero diagonal at " + std::to_string(i) +
                                "; S A is rank deficient");
    return r;
}

struct SaaRun {
    DenseMatrix r;
    LsqrResult lsqr;
    Vector x;
};

// Y = A_used R^{-1}, LSQR on Y, x = R^{-1} z. Trace metrics use x_k = R^{-1} z_k.
inline SaaRun run_sketch_and_apply(const DenseMatrix& a_used, std::span<const double> b, const SketchOperator& sk,
                                   const LsqrConfig& lcfg, Tracer& tracer) {
    SaaRun run;
    run.r = sketch_r_factor(sk, a_used);
    const DenseMatrix y = right_divide_upper(a_used, run.r);
    const DenseMatrix& r = run.r;
    LsqrObserver obs;
    if (tracer.opts.enabled)
        obs = [&](std::size_t k, std::span<const double> z) { tracer.record(k, solve_upper_triangular(r, z)); };
    run.lsqr = lsqr_solve(dense_operator(y), b, lcfg, obs);
    run.x = solve_upper_triangular(r, run.lsqr.x);
    return run;
}

} // namespace detail

/// ||A||_2 by power iteration on A^T A from a seeded random start.
inline double estimate_norm2(const DenseMatrix& a, int iterations, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 17));
    Vector v = gaussian_vector(a.cols(), rng);
    double est = 0.0;
    for (int it = 0; it < std::max(iterations, 1); ++it) {
        const double vn = norm2(v);
        if (vn == 0.0) return 0.0;
        scale(1.0 / vn, v);
        const Vector av = matvec(a, v);
        est = norm2(av);
        v = matvec_transpose(a, av);
    }
    return est;
}

inline SolveReport sketch_and_precondition(const DenseMatrix& a, std::span<const double> b,
                                           const SolverConfig& cfg, std::uint64_t seed,
                                           const TraceOptions& trace = {}) {
    detail::check_problem(a, b);
    SolveReport rep;
    rep.solver = SolverKind::sap;
    rep.seed = seed;
    detail::Tracer tracer{a, b, trace, rep.trace, norm2(b)};
    const auto t0 = detail::Clock::now();

    const SketchOperator sk = detail::draw_sketch(cfg.sketch, a.rows(), a.cols(), seed);
    rep.sketch_rows = sk.s;
    const DenseMatrix r = detail::sketch_r_factor(sk, a);
    const RightPreconditioner pre = upper_triangular_preconditioner(r);
    LsqrObserver obs;
    if (trace.enabled) obs = [&](std::size_t k, std::span<const double> x) { tracer.record(k, x); };
    LsqrResult res = lsqr_solve(dense_operator(a), b, cfg.lsqr, obs, &pre);

    rep.wall_time = detail::seconds_since(t0) - tracer.spent;
    rep.x = std::move(res.x);
    rep.history = std::move(res.history);
    rep.converged = res.converged;
    rep.stop = res.stop;
    return rep;
}

namespace detail {

inline SolveReport sketch_and_apply_with(const DenseMatrix& a, std::span<const double> b, const SketchOperator& sk,
                                         const LsqrConfig& lcfg, std::uint64_t seed, const TraceOptions& trace,
                                         SolverKind kind) {
    SolveReport rep;
    rep.solver = kind;
    rep.seed = seed;
    rep.sketch_rows = sk.s;
    detail::Tracer tracer{a, b, trace, rep.trace, norm2(b)};
    const auto t0 = detail::Clock::now();
    SaaRun run = run_sketch_and_apply(a, b, sk, lcfg, tracer);
    rep.wall_time = detail::seconds_since(t0) - tracer.spent;
    rep.x = std::move(run.x);
    rep.history = std::move(run.lsqr.history);
    rep.converged = run.lsqr.converged;
    rep.stop = run.lsqr.stop;
    return rep;
}

} // namespace detail

inline SolveReport sketch_and_apply(const DenseMatrix& a, std::span<const double> b, const SolverConfig& cfg,
                                    std::uint64_t seed, const TraceOptions& trace = {}) {
    detail::check_problem(a, b);
    const auto t0 = detail::Clock::now();
    const SketchOperator sk = detail::draw_sketch(cfg.sketch, a.rows(), a.cols(), seed);
    const double sketch_time = detail::seconds_since(t0);
    SolveReport rep = detail::sketch_and_apply_with(a, b, sk, cfg.lsqr, seed, trace, SolverKind::saa);
    rep.wall_time += sketch_time;
    return rep;
}

/// sigma for the smoothing perturbation under `rule`.
inline double smoothing_sigma(const DenseMatrix& a, const SketchOperator& sk, const SolverConfig& cfg,
                              std::uint64_t seed) {
    switch (cfg.sigma.kind) {
    case SigmaRule::Kind::fixed: return cfg.sigma.value;
    case SigmaRule::Kind::recommended:
        return 10.0 * estimate_norm2(a, cfg.norm_power_iterations, seed) * unit_roundoff;
    case SigmaRule::Kind::conservative: {
        const SketchDistortion d = sketch_distortion(sk, orthonormal_range_basis(a));
        const double m = static_cast<double>(a.rows()), n = static_cast<double>(a.cols());
        return 52.0 * estimate_norm2(a, cfg.norm_power_iterations, seed) * d.k_s * static_cast<double>(sk.s) * m *
               std::sqrt(n) * unit_roundoff;
    }
    }
    return 0.0;
}

/// A + sigma G / sqrt(m), G i.i.d. standard Gaussian from the smoothing stream.
inline DenseMatrix smooth_matrix(const DenseMatrix& a, double sigma, std::uint64_t seed) {
    Rng rng = make_rng(seed, Stream::smoothing);
    DenseMatrix g = gaussian_matrix(a.rows(), a.cols(), rng);
    return add(a, g, sigma / std::sqrt(static_cast<double>(a.rows())));
}

namespace detail {

inline SolveReport smoothed_with(const DenseMatrix& a, std::span<const double> b, const SketchOperator& sk,
                                 const SolverConfig& cfg, std::uint64_t seed, const TraceOptions& trace,
                                 SolverKind kind) {
    const auto t0 = Clock::now();
    const double sigma = smoothing_sigma(a, sk, cfg, seed);
    DenseMatrix a_tilde = smooth_matrix(a, sigma, seed);
    const double prep = seconds_since(t0);

    SolveReport rep;
    rep.solver = kind;
    rep.seed = seed;
    rep.sketch_rows = sk.s;
    Tracer tracer{a, b, trace, rep.trace, norm2(b)};
    const auto t1 = Clock::now();
    SaaRun run = run_sketch_and_apply(a_tilde, b, sk, cfg.lsqr, tracer);
    rep.wall_time = prep + seconds_since(t1) - tracer.spent;
    rep.x = std::move(run.x);
    rep.history = std::move(run.lsqr.history);
    rep.converged = run.lsqr.converged;
    rep.stop = run.lsqr.stop;
    rep.smoothing_applied = true;
    rep.smoothing_attempted = true;
    rep.sigma_used = sigma;
    rep.smoothed_matrix = std::move(a_tilde);
    return rep;
}

} // namespace detail

inline SolveReport smoothed_sketch_and_apply(const DenseMatrix& a, std::span<const double> b,
                                             const SolverConfig& cfg, std::uint64_t seed,
                                             const TraceOptions& trace = {}) {
    detail::check_problem(a, b);
    const auto t0 = detail::Clock::now();
    const SketchOperator sk = detail::draw_sketch(cfg.sketch, a.rows(), a.cols(), seed);
    const double sketch_time = detail::seconds_since(t0);
    SolveReport rep = detail::smoothed_with(a, b, sk, cfg, seed, trace, SolverKind::smoothed_saa);
    rep.wall_time += sketch_time;
    return rep;
}

/// sketch_and_apply; if LSQR neither meets its tolerance nor keeps improving,
/// rerun on the smoothed matrix with the same sketch. The smoothed result is
/// returned unless its residual on the original problem is worse than the
/// first attempt's.
inline SolveReport master_solve(const DenseMatrix& a, std::span<const double> b, const SolverConfig& cfg,
                                std::uint64_t seed, const TraceOptions& trace = {}) {
    detail::check_problem(a, b);
    const auto t0 = detail::Clock::now();
    const SketchOperator sk = detail::draw_sketch(cfg.sketch, a.rows(), a.cols(), seed);

    LsqrConfig phase1_cfg = cfg.lsqr;
    phase1_cfg.stagnation_window = cfg.master_stagnation_window;
    SolveReport first = detail::sketch_and_apply_with(a, b, sk, phase1_cfg, seed, trace, SolverKind::master);
    first.kappa_r = condition_number(detail::sketch_r_factor(sk, a));
    if (first.converged) {
        first.wall_time = detail::seconds_since(t0);
        return first;
    }

    SolveReport second = detail::smoothed_with(a, b, sk, cfg, seed, trace, SolverKind::master);
    second.kappa_r = first.kappa_r;
    const double bn = norm2(b);
    const double res1 = bn > 0.0 ? relative_residual(a, b, first.x) : 0.0;
    const double res2 = bn > 0.0 ? relative_residual(a, b, second.x) : 0.0;
    const double elapsed = detail::seconds_since(t0);
    if (!(res2 <= res1)) {
        first.smoothing_attempted = true;
        first.wall_time = elapsed;
        return first;
    }
    second.wall_time = elapsed;
    return second;
}

inline SolveReport hhqr_direct(const DenseMatrix& a, std::span<const double> b, const TraceOptions& trace = {}) {
    if (b.size() != a.rows()) throw DimensionError("hhqr_direct: b length != rows of A");
    SolveReport rep;
    rep.solver = SolverKind::hhqr_direct;
    detail::Tracer tracer{a, b, trace, rep.trace, norm2(b)};
    const auto t0 = detail::Clock::now();

    const QrFactors f = householder_qr(a);
    Vector qtb(b.begin(), b.end());
    f.apply_qt(qtb);
    rep.x = solve_upper_triangular(f.r, std::span<const double>(qtb).first(a.cols()));
    double tail = 0.0;
    for (std::size_t i = a.cols(); i < qtb.size(); ++i) tail = detail::lapy2(tail, qtb[i]);

    rep.wall_time = detail::seconds_since(t0);
    rep.history.records.push_back({0, tail, 0.0, 0.0});
    rep.converged = true;
    rep.stop = LsqrStop::residual_tol;
    tracer.record(0, rep.x);
    return rep;
}

/// Dispatch by solver kind (the QR baseline ignores `cfg` and `seed`).
inline SolveReport solve(SolverKind kind, const DenseMatrix& a, std::span<const double> b, const SolverConfig& cfg,
                         std::uint64_t seed, const TraceOptions& trace = {}) {
    switch (kind) {
    case SolverKind::sap: return sketch_and_precondition(a, b, cfg, seed, trace);
    case SolverKind::saa: return sketch_and_apply(a, b, cfg, seed, trace);
    case SolverKind::smoothed_saa: return smoothed_sketch_and_apply(a, b, cfg, seed, trace);
    case SolverKind::master: return master_solve(a, b, cfg, seed, trace);
    case SolverKind::hhqr_direct: {
        SolveReport r = hhqr_direct(a, b, trace);
        r.seed = seed;
        return r;
    }
    }
    throw std::invalid_argument("solve: unknown solver");
}

} // namespace sketchls
