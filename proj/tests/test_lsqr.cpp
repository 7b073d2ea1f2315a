#include <gtest/gtest.h>

#include <cmath>

#include <sketchls/pipelines.hpp>
#include <sketchls/problems.hpp>

using namespace sketchls;

namespace {

constexpr double u = unit_roundoff;

DenseMatrix diag(std::initializer_list<double> d) {
    DenseMatrix a(d.size(), d.size());
    std::size_t i = 0;
    for (double v : d) a(i, i) = v, ++i;
    return a;
}

double adjoint_gap(const LinearOperator& op, std::uint64_t seed) {
    Rng rng(seed);
    const Vector v = gaussian_vector(op.cols, rng);
    const Vector w = gaussian_vector(op.rows, rng);
    const Vector av = op.apply(v);
    const Vector atw = op.apply_transpose(w);
    const double lhs = dot(av, w), rhs = dot(v, atw);
    return std::abs(lhs - rhs) / (norm2(av) * norm2(w) + norm2(v) * norm2(atw));
}

DenseMatrix upper_with_condition(std::size_t n, double kappa, std::uint64_t seed) {
    Rng rng(seed);
    const Vector sigma = log_spaced_spectrum(n, kappa);
    return householder_qr(matrix_with_spectrum(n, n, sigma, rng)).r;
}

} // namespace

TEST(Lsqr, IdentityInOneStep) {
    const DenseMatrix id = DenseMatrix::identity(5);
    const Vector b{1.0, -2.0, 3.0, 0.5, 4.0};
    const auto res = lsqr_solve(dense_operator(id), b);
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.iterations(), 1u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(res.x[i], b[i], 4 * u * std::abs(b[i]));
}

TEST(Lsqr, ThreeDistinctEigenvalues) {
    const DenseMatrix a = diag({1.0, 2.0, 4.0});
    const auto res = lsqr_solve(dense_operator(a), std::vector{1.0, 2.0, 4.0});
    EXPECT_TRUE(res.converged);
    EXPECT_LE(res.iterations(), 3u);
    for (double v : res.x) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Lsqr, HistoryIncludesInitialIterate) {
    Rng rng(3);
    const DenseMatrix a = gaussian_matrix(40, 6, rng);
    const Vector b = gaussian_vector(40, rng);
    std::size_t calls = 0;
    const auto res = lsqr_solve(dense_operator(a), b, {1e-14, 0, 0},
                                [&](std::size_t k, std::span<const double>) { EXPECT_EQ(k, calls++); });
    EXPECT_EQ(res.history.records.size(), res.iterations() + 1);
    EXPECT_EQ(calls, res.history.records.size());
    EXPECT_EQ(res.history.records.front().iteration, 0u);
    EXPECT_DOUBLE_EQ(res.history.records.front().residual_estimate, norm2(b));
}

TEST(Lsqr, ResidualEstimateIsMonotone) {
    Rng rng(5);
    const Vector sigma = log_spaced_spectrum(30, 1e4);
    const DenseMatrix a = matrix_with_spectrum(200, 30, sigma, rng);
    const Vector b = gaussian_vector(200, rng);
    const auto res = lsqr_solve(dense_operator(a), b, {1e-14, 200, 0});
    const double slack = 10.0 * u * norm2(b);
    const auto& h = res.history.records;
    for (std::size_t k = 1; k < h.size(); ++k)
        EXPECT_LE(h[k].residual_estimate, h[k - 1].residual_estimate + slack) << "iteration " << k;
}

TEST(Lsqr, ResidualEstimateMatchesTrueResidual) {
    Rng rng(7);
    const Vector sigma = log_spaced_spectrum(20, 1e3);
    const DenseMatrix a = matrix_with_spectrum(120, 20, sigma, rng);
    const Vector b = gaussian_vector(120, rng);
    std::vector<double> true_res;
    const auto res = lsqr_solve(dense_operator(a), b, {1e-14, 0, 0}, [&](std::size_t, std::span<const double> x) {
        true_res.push_back(norm2(residual(a, b, x)));
    });
    ASSERT_EQ(true_res.size(), res.history.records.size());
    for (std::size_t k = 0; k < true_res.size(); ++k) {
        const double est = res.history.records[k].residual_estimate;
        if (true_res[k] <= 1e-12 * norm2(b)) continue;
        EXPECT_NEAR(est, true_res[k], 1e-8 * true_res[k]) << "iteration " << k;
    }
}

TEST(Lsqr, ZeroRightHandSide) {
    const DenseMatrix a = diag({1.0, 2.0});
    const auto res = lsqr_solve(dense_operator(a), std::vector{0.0, 0.0});
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.stop, LsqrStop::zero_rhs);
    EXPECT_EQ(res.iterations(), 0u);
    EXPECT_EQ(res.x, (Vector{0.0, 0.0}));
}

TEST(Lsqr, RhsOrthogonalToRange) {
    DenseMatrix a(3, 1);
    a(0, 0) = 1.0;
    const auto res = lsqr_solve(dense_operator(a), std::vector{0.0, 1.0, 0.0});
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.x[0], 0.0);
}

TEST(Lsqr, InvalidArguments) {
    const DenseMatrix a = diag({1.0, 2.0});
    EXPECT_THROW(lsqr_solve(dense_operator(a), std::vector{1.0}), DimensionError);
    EXPECT_THROW(lsqr_solve(dense_operator(a), std::vector{1.0, 1.0}, {0.0, 0, 0}), std::invalid_argument);
}

TEST(Lsqr, DefaultIterationCap) {
    LsqrConfig cfg;
    EXPECT_EQ(cfg.iteration_cap(10), 100u);
    EXPECT_EQ(cfg.iteration_cap(100), 400u);
    cfg.maxit = 7;
    EXPECT_EQ(cfg.iteration_cap(100), 7u);
}

TEST(Lsqr, MaxitStopsUnconverged) {
    Rng rng(9);
    const Vector sigma = log_spaced_spectrum(40, 1e8);
    const DenseMatrix a = matrix_with_spectrum(100, 40, sigma, rng);
    const Vector b = gaussian_vector(100, rng);
    const auto res = lsqr_solve(dense_operator(a), b, {1e-14, 5, 0});
    EXPECT_FALSE(res.converged);
    EXPECT_EQ(res.stop, LsqrStop::maxit);
    EXPECT_EQ(res.iterations(), 5u);
}

TEST(Lsqr, StagnationDetectorFires) {
    // An ill-conditioned operator with tol far below reach: progress stalls.
    Rng rng(10);
    const Vector sigma = log_spaced_spectrum(20, 1e14);
    const DenseMatrix a = matrix_with_spectrum(60, 20, sigma, rng);
    const Vector b = gaussian_vector(60, rng);
    const auto res = lsqr_solve(dense_operator(a), b, {1e-300, 5000, 20});
    EXPECT_FALSE(res.converged);
    EXPECT_EQ(res.stop, LsqrStop::stagnation);
    EXPECT_LT(res.iterations(), 5000u);
}

TEST(PreconditionedOperator, IdentityFactorGivesA) {
    Rng rng(11);
    const DenseMatrix a = gaussian_matrix(15, 4, rng);
    const DenseMatrix id = DenseMatrix::identity(4);
    const LinearOperator op = right_preconditioned_operator(a, id);
    const LinearOperator plain = dense_operator(a);
    for (int t = 0; t < 3; ++t) {
        const Vector v = gaussian_vector(4, rng), w = gaussian_vector(15, rng);
        EXPECT_EQ(op.apply(v), plain.apply(v));
        EXPECT_EQ(op.apply_transpose(w), plain.apply_transpose(w));
    }
}

TEST(PreconditionedOperator, AdjointConsistency) {
    Rng rng(12);
    const DenseMatrix a = gaussian_matrix(50, 10, rng);
    for (double kappa : {1.0, 1e3, 1e6}) {
        const DenseMatrix r = upper_with_condition(10, kappa, 13);
        const LinearOperator op = right_preconditioned_operator(a, r);
        for (std::uint64_t s = 0; s < 5; ++s) EXPECT_LE(adjoint_gap(op, s), 1e-10) << "kappa " << kappa;
    }
}

TEST(PreconditionedOperator, DenseOperatorAdjoint) {
    Rng rng(14);
    const DenseMatrix a = gaussian_matrix(30, 8, rng);
    for (std::uint64_t s = 0; s < 5; ++s) EXPECT_LE(adjoint_gap(dense_operator(a), s), 100.0 * 30 * u);
}

TEST(PreconditionedOperator, SingularFactorRejected) {
    const DenseMatrix a(4, 2, 1.0);
    EXPECT_THROW(right_preconditioned_operator(a, DenseMatrix(2, 2)), SingularError);
}

TEST(PreconditionedLsqr, StagnatesNearKappaTimesUnitRoundoff) {
    // kappa 1e10, noise 1e-14, m = 2000, n = 100, s = 800, LSQR through A R^{-1}.
    const LsProblem p = gen_random_ls(2000, 100, 1e10, 1e-14, derive_seed(1, 1));
    SolverConfig cfg;
    cfg.sketch.rows = 800;
    const SolveReport rep = sketch_and_precondition(p.a, p.b, cfg, derive_seed(1, 1));
    const double rr = relative_residual(p.a, p.b, rep.x);
    const double target = 1e10 * u;
    EXPECT_GE(rr, target / 100.0) << "final relative residual " << rr;
    EXPECT_LE(rr, target * 100.0) << "final relative residual " << rr;
    EXPECT_GT(rr, 1e4 * 1e-14 / norm2(p.b));
}

TEST(SketchedLsqr, WellConditionedYConvergesQuickly) {
    const LsProblem p = gen_random_ls(2000, 100, 1e10, 1e-14, 21);
    SolverConfig cfg;
    cfg.sketch.rows = 800;
    const SolveReport rep = sketch_and_apply(p.a, p.b, cfg, 21);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.iterations(), 100u);
}

TEST(SketchedLsqr, PreconditionedAndAppliedAgreeWhenWellConditioned) {
    for (double kappa : {1.0, 10.0, 100.0}) {
        const LsProblem p = gen_random_ls(400, 20, kappa, 1e-6, 31);
        SolverConfig cfg;
        const SolveReport a = sketch_and_precondition(p.a, p.b, cfg, 31);
        const SolveReport b = sketch_and_apply(p.a, p.b, cfg, 31);
        EXPECT_LE(forward_error(a.x, b.x), 1e-10) << "kappa " << kappa;
    }
}
