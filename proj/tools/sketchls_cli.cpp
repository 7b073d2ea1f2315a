// sketchls: solve, experiment, bench, selftest.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include <sketchls/sketchls.hpp>

namespace {

using namespace sketchls;
using nlohmann::json;

struct Options {
    std::string config;
    std::string out;
    std::string input;
    std::string generator;
    std::string sketch;
    std::string solvers;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> m, n, maxit, replicates, threads, repeats, backward_error_cap, sketch_rows;
    std::vector<double> kappa, noise;
    std::optional<double> oversample, tol, theta;
    bool allow_nonconverged = false;
    bool no_timing = false;
};

void add_common(CLI::App* app, Options& o) {
    app->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
    app->add_option("--seed", o.seed, "root seed");
    app->add_option("--out", o.out, "output path (default: stdout)");
    app->add_option("--solvers", o.solvers, "comma-separated: sap,saa,smoothed,master,qr");
    app->add_option("--m", o.m, "rows");
    app->add_option("--n", o.n, "columns");
    app->add_option("--kappa", o.kappa, "condition number(s) of the generated matrix")->delimiter(',');
    app->add_option("--noise", o.noise, "noise norm(s) ||e||_2")->delimiter(',');
    app->add_option("--oversample", o.oversample, "sketch rows s = ceil(oversample * n)");
    app->add_option("--sketch-rows", o.sketch_rows, "explicit sketch size s");
    app->add_option("--sketch", o.sketch, "sketch kind: srct, gaussian");
    app->add_option("--tol", o.tol, "LSQR tolerance");
    app->add_option("--maxit", o.maxit, "LSQR iteration cap (0: max(100, 4n))");
    app->add_flag("--allow-nonconverged", o.allow_nonconverged, "exit 0 even if a solve did not converge");
}

void add_problem(CLI::App* app, Options& o) {
    app->add_option("--generator", o.generator, "random, kahan, vandermonde");
    app->add_option("--theta", o.theta, "Kahan angle");
    app->add_option("--input", o.input, "problem JSON sidecar (matrix and rhs CSV files)")->check(CLI::ExistingFile);
}

std::vector<SolverKind> solver_list(const std::string& csv) {
    std::vector<SolverKind> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const auto comma = csv.find(',', start);
        const std::string name = csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!name.empty()) out.push_back(parse_solver(name));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

void apply_solver_overrides(const Options& o, SolverConfig& cfg) {
    if (o.oversample) cfg.sketch.oversampling = *o.oversample;
    if (o.sketch_rows) cfg.sketch.rows = *o.sketch_rows;
    if (!o.sketch.empty()) cfg.sketch.kind = parse_sketch_kind(o.sketch);
    if (o.tol) cfg.lsqr.tol = *o.tol;
    if (o.maxit) cfg.lsqr.maxit = *o.maxit;
}

ExperimentConfig experiment_config(const Options& o) {
    ExperimentConfig cfg;
    if (!o.config.empty()) cfg = parse_experiment_config(read_json_file(o.config));
    if (!o.generator.empty()) cfg.problem.generator = o.generator;
    if (!o.input.empty()) {
        cfg.problem.generator = "file";
        cfg.problem.input = o.input;
    }
    if (o.m) cfg.problem.m = *o.m;
    if (o.n) cfg.problem.n = *o.n;
    if (!o.kappa.empty()) cfg.problem.kappas = o.kappa;
    if (!o.noise.empty()) cfg.problem.noises = o.noise;
    if (o.theta) cfg.problem.theta = *o.theta;
    if (!o.solvers.empty()) cfg.solvers = solver_list(o.solvers);
    if (o.seed) cfg.seed = *o.seed;
    if (o.replicates) cfg.replicates = *o.replicates;
    if (o.threads) cfg.threads = *o.threads;
    if (o.backward_error_cap) cfg.backward_error_cap = *o.backward_error_cap;
    if (o.no_timing) cfg.timing = false;
    if (!o.out.empty()) cfg.output = o.out;
    apply_solver_overrides(o, cfg.solver);
    cfg.validate();
    return cfg;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

int run_solve(const Options& o) {
    ExperimentConfig cfg = experiment_config(o);
    if (cfg.problem.kappas.size() > 1 || cfg.problem.noises.size() > 1)
        throw ConfigError("kappa", "solve takes a single kappa and noise; use experiment for grids");
    const ExperimentCell cell{cfg.problem.kappas.front(), cfg.problem.noises.front(), 0, cfg.seed};
    const LsProblem prob = make_cell_problem(cfg, cell);

    bool all_converged = true;
    json runs = json::array();
    for (SolverKind kind : cfg.solvers) {
        const SolveReport rep = solve(kind, prob.a, prob.b, cfg.solver, cfg.seed);
        all_converged = all_converged && rep.converged;
        json r = {{"solver", to_string(kind)},
                  {"converged", rep.converged},
                  {"stop", kind == SolverKind::hhqr_direct ? "direct" : to_string(rep.stop)},
                  {"iterations", rep.iterations()},
                  {"sketch_rows", rep.sketch_rows},
                  {"smoothing_applied", rep.smoothing_applied},
                  {"sigma_used", rep.sigma_used},
                  {"wall_time_s", rep.wall_time},
                  {"kappa_r", optional_json(rep.kappa_r)}};
        if (norm2(prob.b) > 0.0) r["rel_residual"] = relative_residual(prob.a, prob.b, rep.x);
        if (prob.xstar && norm2(*prob.xstar) > 0.0) r["fwd_error"] = forward_error(rep.x, *prob.xstar);
        if (prob.rows() <= cfg.backward_error_cap) r["backward_error"] = optimal_backward_error(prob.a, prob.b, rep.x);
        runs.push_back(std::move(r));
    }
    const json summary = {{"m", prob.rows()},
                          {"n", prob.cols()},
                          {"generator", prob.generator},
                          {"seed", cfg.seed},
                          {"kappa", optional_json(prob.kappa_by_construction)},
                          {"noise_norm", prob.noise_norm},
                          {"runs", runs}};
    if (cfg.output.empty()) {
        std::cout << summary.dump(2) << '\n';
    } else {
        std::ofstream out(cfg.output);
        out << summary.dump(2) << '\n';
        if (!out) throw std::runtime_error("write failed: " + cfg.output);
    }
    return all_converged || o.allow_nonconverged ? 0 : 1;
}

int run_experiment_cmd(const Options& o) {
    const ExperimentConfig cfg = experiment_config(o);
    const auto runs = run_experiment_detailed(cfg);
    std::vector<ExperimentRecord> records;
    bool all_converged = true;
    for (const auto& run : runs) {
        all_converged = all_converged && run.converged;
        if (!run.converged)
            std::cerr << "not converged: solver " << run.solver << " seed " << run.seed << " after "
                      << run.iterations << " iterations\n";
        records.insert(records.end(), run.records.begin(), run.records.end());
    }
    if (cfg.output.empty())
        write_csv(std::cout, records);
    else
        emit_csv(records, cfg.output);
    return all_converged || o.allow_nonconverged ? 0 : 1;
}

int run_bench_cmd(const Options& o) {
    BenchConfig cfg;
    if (!o.config.empty()) cfg = parse_bench_config(read_json_file(o.config));
    if (o.m || o.n) cfg.sizes = {{o.m.value_or(cfg.sizes.front().first), o.n.value_or(cfg.sizes.front().second)}};
    if (!o.kappa.empty()) cfg.kappa = o.kappa.front();
    if (!o.noise.empty()) cfg.noise = o.noise.front();
    if (!o.solvers.empty()) cfg.solvers = solver_list(o.solvers);
    if (o.seed) cfg.seed = *o.seed;
    if (o.repeats) cfg.repeats = *o.repeats;
    apply_solver_overrides(o, cfg.solver);
    const auto rows = bench(cfg);
    if (o.out.empty()) {
        write_bench_table(std::cout, rows);
    } else {
        std::ofstream out(o.out);
        write_bench_table(out, rows);
        if (!out) throw std::runtime_error("write failed: " + o.out);
    }
    bool all_converged = true;
    for (const auto& r : rows) all_converged = all_converged && r.converged;
    return all_converged || o.allow_nonconverged ? 0 : 1;
}

bool report(const char* name, bool ok, const std::string& detail) {
    std::printf("%s  %-34s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    return ok;
}

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

int run_selftest(const Options& o) {
    const std::uint64_t seed = o.seed.value_or(1);
    bool ok = true;

    const OracleAgreement gate = oracle_agreement(50, seed);
    ok &= report("backward-error oracle agreement", gate.worst_relative_gap <= 1e-2,
                 fmt("worst relative gap %.2e over 50 instances", gate.worst_relative_gap));

    {
        Rng rng(derive_seed(seed, 1));
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const DenseMatrix a = gaussian_matrix(30, 5, rng);
            const Vector b = gaussian_vector(30, rng), x = gaussian_vector(5, rng);
            worst = std::max(worst, optimal_backward_error(a, b, x) / norm2(residual(a, b, x)));
        }
        ok &= report("eta_F <= ||b - A x||", worst <= 1.0, fmt("max ratio %.3f", worst));
    }

    {
        Rng rng(derive_seed(seed, 2));
        const DenseMatrix a = gaussian_matrix(200, 20, rng);
        const QrFactors f = householder_qr(a);
        const DenseMatrix qr = matmul(f.form_q(), f.r);
        const double rel = frobenius_norm(add(qr, a, -1.0)) / frobenius_norm(a);
        const double bound = 10.0 * std::sqrt(20.0) * gamma_tilde(200.0 * 20.0);
        ok &= report("Householder QR reconstruction", rel <= bound, fmt("%.2e <= %.2e", rel, bound));
    }

    {
        // Regime where every hypothesis of the kappa(Y) bound holds: m/n + sqrt(n) > 200.
        const std::size_t m = 2000, n = 10;
        SolverConfig cfg;
        cfg.sketch.rows = 80;
        std::size_t flagged = 0, held = 0;
        for (double kappa : {1e1, 1e6}) {
            const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(std::log10(kappa)) + 10);
            const LsProblem p = gen_random_ls(m, n, kappa, 1e-10, s);
            const SketchOperator sk = detail::draw_sketch(cfg.sketch, m, n, s);
            const DenseMatrix r = detail::sketch_r_factor(sk, p.a);
            const BoundReport br = evaluate_bounds(p.a, sk, r, right_divide_upper(p.a, r), kappa, &*p.qa_basis);
            if (br.yhat_bound_applies()) {
                ++flagged;
                held += br.kappa_Yhat_measured <= br.yhat_kappa_bound;
            }
        }
        ok &= report("kappa(Y) <= 4 kappa(S Q_A) + 1", flagged > 0 && held == flagged,
                     fmt("%.0f of %.0f flagged instances", static_cast<double>(held), static_cast<double>(flagged)));
    }

    {
        const LsProblem p = gen_random_ls(400, 20, 1e3, 1e-6, seed);
        SolverConfig cfg;
        double worst = 0.0;
        const double ref = relative_residual(p.a, p.b, hhqr_direct(p.a, p.b).x);
        for (SolverKind k : {SolverKind::sap, SolverKind::saa, SolverKind::master})
            worst = std::max(worst, std::abs(relative_residual(p.a, p.b, solve(k, p.a, p.b, cfg, seed).x) - ref));
        ok &= report("solvers agree on a well-posed problem", worst <= 1e-10, fmt("max residual gap %.2e", worst));
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized least-squares solvers: sketch-and-precondition, sketch-and-apply, smoothing"};
    app.require_subcommand(1);
    Options o;

    auto* solve_cmd = app.add_subcommand("solve", "solve one problem and print a JSON summary");
    add_common(solve_cmd, o);
    add_problem(solve_cmd, o);
    solve_cmd->add_option("--backward-error-cap", o.backward_error_cap, "compute eta_F only when m <= cap");

    auto* exp_cmd = app.add_subcommand("experiment", "run a problem grid and write per-iteration CSV");
    add_common(exp_cmd, o);
    add_problem(exp_cmd, o);
    exp_cmd->add_option("--backward-error-cap", o.backward_error_cap, "per-iteration eta_F only when m <= cap");
    exp_cmd->add_option("--replicates", o.replicates, "problem replicates per grid cell");
    exp_cmd->add_option("--threads", o.threads, "worker threads (0: all cores)");
    exp_cmd->add_flag("--no-timing", o.no_timing, "leave wall_time_s empty for byte-stable output");

    auto* bench_cmd = app.add_subcommand("bench", "time sap, saa and qr and report the best of k repeats");
    add_common(bench_cmd, o);
    bench_cmd->add_option("--repeats", o.repeats, "repeats per solver (minimum time is reported)");

    auto* self_cmd = app.add_subcommand("selftest", "oracle agreement and bound checks");
    self_cmd->add_option("--seed", o.seed, "root seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    try {
        if (*solve_cmd) return run_solve(o);
        if (*exp_cmd) return run_experiment_cmd(o);
        if (*bench_cmd) return run_bench_cmd(o);
        if (*self_cmd) return run_selftest(o);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
