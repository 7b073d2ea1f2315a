#include <gtest/gtest.h>

#include <cmath>

#include <sketchls/bounds.hpp>
#include <sketchls/experiment.hpp>

using namespace sketchls;

namespace {

constexpr double u = unit_roundoff;

SolverConfig s800() {
    SolverConfig cfg;
    cfg.sketch.rows = 800;
    return cfg;
}

LsProblem kahan_problem() { return consistent_problem(kahan_matrix(1000, 100, 1.1), 5, "kahan"); }

} // namespace

TEST(SketchAndPrecondition, WellConditionedReachesNoiseFloor) {
    const LsProblem p = gen_random_ls(2000, 100, 10.0, 1e-3, 101);
    const SolveReport rep = sketch_and_precondition(p.a, p.b, s800(), 101);
    const double floor = 1e-3 / norm2(p.b);
    EXPECT_LE(rep.iterations(), 100u);
    EXPECT_NEAR(relative_residual(p.a, p.b, rep.x), floor, 0.01 * floor);
}

TEST(SketchAndPrecondition, IllConditionedStagnates) {
    const LsProblem p = gen_random_ls(2000, 100, 1e10, 1e-14, 102);
    const SolveReport rep = sketch_and_precondition(p.a, p.b, s800(), 102);
    const double rr = relative_residual(p.a, p.b, rep.x);
    EXPECT_GE(optimal_backward_error(p.a, p.b, rep.x), 1e3 * u);
    EXPECT_GE(rr, 2e-6 / 100.0) << "final relative residual " << rr;
    EXPECT_LE(rr, 2e-6 * 100.0) << "final relative residual " << rr;
}

TEST(SketchAndPrecondition, OrthonormalConsistentSystem) {
    const LsProblem p = gen_random_ls(500, 20, 1.0, 0.0, 103);
    const SolveReport rep = sketch_and_precondition(p.a, p.b, SolverConfig{}, 103);
    EXPECT_LE(forward_error(rep.x, *p.xstar), 1e-13);
}

TEST(SketchAndApply, BackwardStableAtExtremeCondition) {
    const LsProblem p = gen_random_ls(2000, 100, 1e15, 1e-14, 104);
    const SolveReport rep = sketch_and_apply(p.a, p.b, s800(), 104);
    EXPECT_LE(optimal_backward_error(p.a, p.b, rep.x), 1e-13);
}

TEST(SketchAndApply, ConditionOfYBoundedByEmbedding) {
    const LsProblem p = gen_random_ls(2000, 100, 1e10, 1e-14, 105);
    const SolverConfig cfg = s800();
    const SketchOperator sk = detail::draw_sketch(cfg.sketch, 2000, 100, 105);
    const DenseMatrix r = detail::sketch_r_factor(sk, p.a);
    const DenseMatrix y = right_divide_upper(p.a, r);
    const SketchDistortion d = sketch_distortion(sk, *p.qa_basis);
    EXPECT_LE(condition_number(y), 4.0 * d.kappa_sqa + 1.0);
}

TEST(SketchAndApply, ColumnScalingInvariance) {
    const LsProblem p = gen_random_ls(1000, 40, 10.0, 1e-10, 106);
    std::vector<int> ex(40);
    for (std::size_t j = 0; j < ex.size(); ++j) ex[j] = (j % 2 ? -1 : 1) * static_cast<int>(3 * j);
    const DenseMatrix ad = column_rescale(p.a, ex);
    ASSERT_GT(condition_number(ad), 1e20);
    const SolveReport r1 = sketch_and_apply(p.a, p.b, SolverConfig{}, 106);
    const SolveReport r2 = sketch_and_apply(ad, p.b, SolverConfig{}, 106);
    EXPECT_LE(r2.iterations(), 2 * r1.iterations());
    EXPECT_LE(r1.iterations(), 2 * r2.iterations());
    EXPECT_NEAR(relative_residual(ad, p.b, r2.x), relative_residual(p.a, p.b, r1.x), 1e-12);
}

TEST(SketchAndApply, SingularSketchedFactorReported) {
    DenseMatrix a(200, 4);
    Rng rng(1);
    for (std::size_t i = 0; i < 200; ++i) a(i, 0) = a(i, 1) = std::normal_distribution<double>()(rng);
    for (std::size_t i = 0; i < 200; ++i) a(i, 2) = 0.0, a(i, 3) = 1.0;
    const Vector b(200, 1.0);
    EXPECT_THROW(sketch_and_apply(a, b, SolverConfig{}, 1), SingularError);
    EXPECT_THROW(sketch_and_precondition(a, b, SolverConfig{}, 1), SingularError);
}

TEST(SketchAndApply, DimensionErrors) {
    const LsProblem p = gen_random_ls(50, 10, 10.0, 0.0, 2);
    SolverConfig cfg;  // s = 80 >= m
    EXPECT_THROW(sketch_and_apply(p.a, p.b, cfg, 2), DimensionError);
    cfg.sketch.rows = 10;  // s = n
    EXPECT_THROW(sketch_and_apply(p.a, p.b, cfg, 2), DimensionError);
    cfg.sketch.rows = 30;
    EXPECT_THROW(sketch_and_apply(p.a, Vector(49, 1.0), cfg, 2), DimensionError);
}

TEST(Smoothed, ZeroSigmaEqualsSketchAndApply) {
    const LsProblem p = gen_random_ls(400, 20, 1e8, 1e-10, 107);
    SolverConfig cfg;
    cfg.sigma = {SigmaRule::Kind::fixed, 0.0};
    const SolveReport a = smoothed_sketch_and_apply(p.a, p.b, cfg, 107);
    const SolveReport b = sketch_and_apply(p.a, p.b, cfg, 107);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.iterations(), b.iterations());
}

TEST(Smoothed, RecordsSigma) {
    const LsProblem p = gen_random_ls(400, 20, 1e8, 1e-10, 108);
    const SolveReport rep = smoothed_sketch_and_apply(p.a, p.b, SolverConfig{}, 108);
    EXPECT_TRUE(rep.smoothing_applied);
    EXPECT_GT(rep.sigma_used, 0.0);
    // 10 ||A|| u with ||A|| = 1 estimated by the power method.
    EXPECT_NEAR(rep.sigma_used, 10.0 * u, 10.0 * u * 0.05);
}

TEST(Smoothed, KahanRescuedWhileUnsmoothedSolversFail) {
    const LsProblem p = kahan_problem();
    SolverConfig cfg;
    const SolveReport sm = smoothed_sketch_and_apply(p.a, p.b, cfg, 5);
    ASSERT_TRUE(sm.smoothed_matrix);
    const SolveReport ref = hhqr_direct(*sm.smoothed_matrix, p.b);
    const double res_sm = relative_residual(*sm.smoothed_matrix, p.b, sm.x);
    const double res_ref = relative_residual(*sm.smoothed_matrix, p.b, ref.x);
    EXPECT_LE(res_sm, std::max(100.0 * res_ref, 1e-13));

    const double res_saa = relative_residual(p.a, p.b, sketch_and_apply(p.a, p.b, cfg, 5).x);
    const double res_sap = relative_residual(p.a, p.b, sketch_and_precondition(p.a, p.b, cfg, 5).x);
    EXPECT_GT(res_saa, 1e-8);
    EXPECT_GT(res_sap, 1e-8);
}

TEST(Smoothed, ExtremeSpectrumBecomesWellConditioned) {
    const std::size_t m = 2000, n = 100;
    int ok = 0;
    const int seeds = 100;
    const double target = 1.0 / (10.0 * u);
    for (int t = 0; t < seeds; ++t) {
        Rng rng(derive_seed(110, static_cast<std::uint64_t>(t)));
        const DenseMatrix a = matrix_with_spectrum(m, n, log_spaced_spectrum(n, 1e20), rng);
        SolverConfig cfg;
        const SketchOperator sk = detail::draw_sketch(cfg.sketch, m, n, static_cast<std::uint64_t>(t));
        const double sigma = smoothing_sigma(a, sk, cfg, static_cast<std::uint64_t>(t));
        const DenseMatrix at = smooth_matrix(a, sigma, static_cast<std::uint64_t>(t));
        ok += condition_number(at) <= 2.0 * target;
    }
    EXPECT_GE(ok, 95);
}

TEST(Master, WellConditionedSkipsSmoothing) {
    const LsProblem p = gen_random_ls(1000, 50, 1e6, 1e-10, 111);
    const SolveReport rep = master_solve(p.a, p.b, SolverConfig{}, 111);
    EXPECT_TRUE(rep.converged);
    EXPECT_FALSE(rep.smoothing_applied);
    EXPECT_EQ(rep.sigma_used, 0.0);
    ASSERT_TRUE(rep.kappa_r);
    EXPECT_GT(*rep.kappa_r, 1e5);
}

TEST(Master, KahanTriggersSmoothing) {
    const LsProblem p = kahan_problem();
    SolverConfig cfg;
    const SolveReport rep = master_solve(p.a, p.b, cfg, 5);
    EXPECT_TRUE(rep.smoothing_applied);
    const SolveReport sm = smoothed_sketch_and_apply(p.a, p.b, cfg, 5);
    const double want = relative_residual(p.a, p.b, sm.x);
    EXPECT_NEAR(relative_residual(p.a, p.b, rep.x), want, 0.1 * want + 1e-15);
}

TEST(Master, ZeroRhs) {
    const LsProblem p = gen_random_ls(300, 10, 1e3, 0.0, 112);
    const Vector zero(300, 0.0);
    const SolveReport rep = master_solve(p.a, zero, SolverConfig{}, 112);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.iterations(), 1u);
    for (double v : rep.x) EXPECT_EQ(v, 0.0);
}

TEST(Master, NeverWorseThanPhaseOne) {
    for (double kappa : {1e6, 1e12, 1e15}) {
        const LsProblem p = gen_random_ls(1000, 50, kappa, 1e-12, 113);
        SolverConfig cfg;
        const SolveReport rep = master_solve(p.a, p.b, cfg, 113);
        SolverConfig phase1 = cfg;
        phase1.lsqr.stagnation_window = cfg.master_stagnation_window;
        const SolveReport first = sketch_and_apply(p.a, p.b, phase1, 113);
        EXPECT_LE(relative_residual(p.a, p.b, rep.x), relative_residual(p.a, p.b, first.x)) << "kappa " << kappa;
        EXPECT_EQ(rep.sigma_used == 0.0, !rep.smoothing_applied);
    }
    const LsProblem k = kahan_problem();
    SolverConfig cfg;
    const SolveReport rep = master_solve(k.a, k.b, cfg, 5);
    SolverConfig phase1 = cfg;
    phase1.lsqr.stagnation_window = cfg.master_stagnation_window;
    const SolveReport first = sketch_and_apply(k.a, k.b, phase1, 5);
    EXPECT_LE(relative_residual(k.a, k.b, rep.x), relative_residual(k.a, k.b, first.x));
}

TEST(DirectQr, SquareConsistentSystem) {
    Rng rng(114);
    const DenseMatrix a = matrix_with_spectrum(30, 30, log_spaced_spectrum(30, 1e4), rng);
    const Vector x0 = gaussian_vector(30, rng);
    const SolveReport rep = hhqr_direct(a, matvec(a, x0));
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(forward_error(rep.x, x0), 1e4 * 30 * u * 1e3);
}

TEST(DirectQr, BackwardStableAtExtremeCondition) {
    const LsProblem p = gen_random_ls(2000, 100, 1e15, 1e-14, 115);
    const SolveReport rep = hhqr_direct(p.a, p.b);
    EXPECT_LE(optimal_backward_error(p.a, p.b, rep.x), 1e-13);
}

TEST(Pipelines, DeterministicUnderSeed) {
    const LsProblem p = gen_random_ls(600, 30, 1e9, 1e-12, 116);
    TraceOptions tr;
    tr.enabled = true;
    tr.xstar = *p.xstar;
    tr.backward_error = true;
    for (SolverKind k : {SolverKind::sap, SolverKind::saa, SolverKind::smoothed_saa, SolverKind::master,
                         SolverKind::hhqr_direct}) {
        const SolveReport a = solve(k, p.a, p.b, SolverConfig{}, 116, tr);
        const SolveReport b = solve(k, p.a, p.b, SolverConfig{}, 116, tr);
        EXPECT_EQ(a.x, b.x) << to_string(k);
        ASSERT_EQ(a.trace.size(), b.trace.size()) << to_string(k);
        for (std::size_t i = 0; i < a.trace.size(); ++i) {
            EXPECT_EQ(a.trace[i].rel_residual, b.trace[i].rel_residual);
            EXPECT_EQ(a.trace[i].fwd_error, b.trace[i].fwd_error);
            EXPECT_EQ(a.trace[i].backward_error, b.trace[i].backward_error);
        }
    }
}

TEST(Pipelines, TracesCoverEveryIteration) {
    const LsProblem p = gen_random_ls(600, 30, 1e4, 1e-8, 117);
    TraceOptions tr;
    tr.enabled = true;
    tr.xstar = *p.xstar;
    const SolveReport rep = sketch_and_apply(p.a, p.b, SolverConfig{}, 117, tr);
    ASSERT_EQ(rep.trace.size(), rep.history.records.size());
    for (std::size_t i = 0; i < rep.trace.size(); ++i) {
        EXPECT_EQ(rep.trace[i].iteration, i);
        EXPECT_TRUE(rep.trace[i].fwd_error);
        EXPECT_FALSE(rep.trace[i].backward_error);
    }
    EXPECT_EQ(rep.trace.front().rel_residual, 1.0);
}

TEST(Pipelines, AllSolversAgreeWhenWellConditioned) {
    for (double kappa : {1.0, 1e2, 1e3}) {
        const LsProblem p = gen_random_ls(800, 40, kappa, 1e-4, 118);
        const double ref = relative_residual(p.a, p.b, hhqr_direct(p.a, p.b).x);
        for (SolverKind k : {SolverKind::sap, SolverKind::saa, SolverKind::smoothed_saa, SolverKind::master}) {
            const SolveReport rep = solve(k, p.a, p.b, SolverConfig{}, 118);
            EXPECT_NEAR(relative_residual(p.a, p.b, rep.x), ref, 1e-10) << to_string(k) << " kappa " << kappa;
        }
    }
}

TEST(Pipelines, ZeroRhsForEverySolver) {
    const LsProblem p = gen_random_ls(300, 10, 10.0, 0.0, 119);
    const Vector zero(300, 0.0);
    for (SolverKind k : {SolverKind::sap, SolverKind::saa, SolverKind::smoothed_saa, SolverKind::master,
                         SolverKind::hhqr_direct}) {
        const SolveReport rep = solve(k, p.a, zero, SolverConfig{}, 119);
        for (double v : rep.x) EXPECT_EQ(v, 0.0) << to_string(k);
    }
}

TEST(Pipelines, StabilitySeparationGrid) {
    // m = 2000, n = 100, s = 8n, kappa in {1e1, 1e10, 1e15}, noise in {1e-3, 1e-14}.
    ExperimentConfig cfg;
    cfg.problem.kappas = {1e1, 1e10, 1e15};
    cfg.problem.noises = {1e-3, 1e-14};
    const auto cells = experiment_cells(cfg);
    ASSERT_EQ(cells.size(), 6u);
    std::vector<double> eta_saa(cells.size()), eta_sap(cells.size());
    parallel_for(cells.size(), 0, [&](std::size_t c) {
        const LsProblem p = make_cell_problem(cfg, cells[c]);
        eta_saa[c] = optimal_backward_error(p.a, p.b, sketch_and_apply(p.a, p.b, cfg.solver, cells[c].seed).x);
        eta_sap[c] =
            optimal_backward_error(p.a, p.b, sketch_and_precondition(p.a, p.b, cfg.solver, cells[c].seed).x);
    });
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& cell = cells[c];
        EXPECT_LE(eta_saa[c], 1e-12) << "saa kappa " << cell.kappa << " noise " << cell.noise;
        if (cell.kappa >= 1e10) {
            EXPECT_GE(eta_sap[c], 1e-9) << "sap kappa " << cell.kappa << " noise " << cell.noise;
        }
    }
}
