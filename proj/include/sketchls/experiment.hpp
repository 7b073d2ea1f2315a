#pragma once

// Experiment grids (problem replicates x solvers -> per-iteration records),
// the CSV record format, and timing benchmarks.

#include <algorithm>
#include <atomic>
#include <iomanip>
#include <mutex>
#include <thread>

#include "io.hpp"
#include "pipelines.hpp"
#include "problems.hpp"

namespace sketchls {

inline SolverKind parse_solver(std::string_view name) {
    if (name == "sap") return SolverKind::sap;
    if (name == "saa") return SolverKind::saa;
    if (name == "smoothed" || name == "smoothed_saa") return SolverKind::smoothed_saa;
    if (name == "master") return SolverKind::master;
    if (name == "qr" || name == "hhqr_direct") return SolverKind::hhqr_direct;
    throw ConfigError("solvers", "unknown solver '" + std::string(name) + "'");
}

inline SketchKind parse_sketch_kind(std::string_view name) {
    if (name == "srct") return SketchKind::srct;
    if (name == "gaussian") return SketchKind::gaussian;
    throw ConfigError("sketch.kind", "unknown sketch kind '" + std::string(name) + "' (expected srct or gaussian)");
}

struct ProblemSpec {
    std::string generator = "random";  ///< random | kahan | vandermonde | file
    std::size_t m = 2000;
    std::size_t n = 100;
    std::vector<double> kappas{1e10};
    std::vector<double> noises{1e-14};
    double theta = 1.1;     ///< kahan
    std::string input;      ///< file: path to the JSON sidecar
};

struct ExperimentConfig {
    ProblemSpec problem;
    std::vector<SolverKind> solvers{SolverKind::sap, SolverKind::saa};
    SolverConfig solver;
    std::uint64_t seed = 1;
    std::size_t replicates = 1;
    bool forward_error = true;
    bool backward_error = true;
    std::size_t backward_error_cap = 4000;  ///< per-iteration eta_F only when m <= cap
    bool timing = true;                     ///< false leaves wall_time_s empty (byte-stable CSV)
    std::size_t threads = 0;                ///< 0: hardware concurrency
    std::string output;

    /// Throws ConfigError naming the first offending field.
    void validate() const {
        const auto& p = problem;
        if (p.generator != "random" && p.generator != "kahan" && p.generator != "vandermonde" &&
            p.generator != "file")
            throw ConfigError("problem.generator", "unknown generator '" + p.generator + "'");
        if (p.generator == "file") {
            if (p.input.empty()) throw ConfigError("problem.input", "required for generator 'file'");
        } else {
            if (p.n < 1) throw ConfigError("problem.n", "must be >= 1");
            if (p.m <= p.n) throw ConfigError("problem.m", "must exceed n");
        }
        if (p.generator == "random") {
            if (p.kappas.empty()) throw ConfigError("problem.kappas", "must not be empty");
            for (double k : p.kappas)
                if (!(k >= 1.0)) throw ConfigError("problem.kappas", "each kappa must be >= 1");
            if (p.noises.empty()) throw ConfigError("problem.noises", "must not be empty");
            for (double e : p.noises)
                if (!(e >= 0.0)) throw ConfigError("problem.noises", "each noise norm must be >= 0");
        }
        if (solvers.empty()) throw ConfigError("solvers", "must name at least one solver");
        if (replicates < 1) throw ConfigError("replicates", "must be >= 1");
        const double n = static_cast<double>(p.n);
        if (p.generator != "file" && solver.sketch.rows == 0 && !(solver.sketch.oversampling * n > n))
            throw ConfigError("sketch.oversampling", "must exceed 1 + 1/n so that s > n");
        if (p.generator != "file" && solver.sketch.rows == 0 &&
            !(std::ceil(solver.sketch.oversampling * n) < static_cast<double>(p.m)))
            throw ConfigError("sketch.oversampling", "sketch size ceil(oversampling * n) must be below m");
        if (!(solver.lsqr.tol > 0.0)) throw ConfigError("lsqr.tol", "must be positive");
    }
};

struct ExperimentRecord {
    std::string solver;
    std::uint64_t seed = 0;
    std::size_t iteration = 0;
    std::optional<double> rel_residual;
    std::optional<double> fwd_error;
    std::optional<double> backward_error;
    std::optional<double> kappa;
    std::optional<double> noise_norm;
    std::optional<double> wall_time;

    friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

inline constexpr std::string_view csv_header =
    "solver,seed,iteration,rel_residual,fwd_error,backward_error,kappa,noise_norm,wall_time_s";

namespace detail {

inline std::string csv_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline std::optional<double> parse_optional(std::string_view s) {
    if (s.empty()) return std::nullopt;
    return parse_double(s);
}

} // namespace detail

inline void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records) {
    out << csv_header << '\n';
    for (const auto& r : records) {
        out << r.solver << ',' << r.seed << ',' << r.iteration << ',' << detail::csv_field(r.rel_residual) << ','
            << detail::csv_field(r.fwd_error) << ',' << detail::csv_field(r.backward_error) << ','
            << detail::csv_field(r.kappa) << ',' << detail::csv_field(r.noise_norm) << ','
            << detail::csv_field(r.wall_time) << '\n';
    }
}

inline void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
    auto out = detail::open_out(path);
    write_csv(out, records);
    detail::check_written(out, path);
}

inline std::vector<ExperimentRecord> parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("parse_csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != csv_header) throw std::invalid_argument("parse_csv: unexpected header '" + line + "'");
    std::vector<ExperimentRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (auto c = rest.find(','); c != std::string_view::npos; c = rest.find(',')) {
            f.push_back(rest.substr(0, c));
            rest.remove_prefix(c + 1);
        }
        f.push_back(rest);
        if (f.size() != 9)
            throw std::invalid_argument("parse_csv: line " + std::to_string(lineno) + " has " +
                                        std::to_string(f.size()) + " fields, expected 9");
        ExperimentRecord r;
        r.solver = std::string(f[0]);
        auto parse_uint = [&](std::string_view s, auto& dst) {
            const auto res = std::from_chars(s.data(), s.data() + s.size(), dst);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size())
                throw std::invalid_argument("parse_csv: line " + std::to_string(lineno) + ": bad integer '" +
                                            std::string(s) + "'");
        };
        parse_uint(f[1], r.seed);
        parse_uint(f[2], r.iteration);
        r.rel_residual = detail::parse_optional(f[3]);
        r.fwd_error = detail::parse_optional(f[4]);
        r.backward_error = detail::parse_optional(f[5]);
        r.kappa = detail::parse_optional(f[6]);
        r.noise_norm = detail::parse_optional(f[7]);
        r.wall_time = detail::parse_optional(f[8]);
        out.push_back(std::move(r));
    }
    return out;
}

/// Runs `task(i)` for i in [0, count) on up to `threads` workers. The first
/// exception is rethrown after all workers finish.
template <class Task>
void parallel_for(std::size_t count, std::size_t threads, Task&& task) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
}

/// One problem instance of the grid.
struct ExperimentCell {
    double kappa = 0.0;
    double noise = 0.0;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
};

inline std::vector<ExperimentCell> experiment_cells(const ExperimentConfig& cfg) {
    std::vector<ExperimentCell> cells;
    const bool random = cfg.problem.generator == "random";
    const std::vector<double> kappas = random ? cfg.problem.kappas : std::vector<double>{0.0};
    const std::vector<double> noises = random ? cfg.problem.noises : std::vector<double>{0.0};
    for (double k : kappas)
        for (double e : noises)
            for (std::size_t r = 0; r < cfg.replicates; ++r) {
                const std::uint64_t idx = cells.size();
                cells.push_back({k, e, r, derive_seed(cfg.seed, idx)});
            }
    return cells;
}

inline LsProblem make_cell_problem(const ExperimentConfig& cfg, const ExperimentCell& cell) {
    const auto& p = cfg.problem;
    if (p.generator == "random") return gen_random_ls(p.m, p.n, cell.kappa, cell.noise, cell.seed);
    if (p.generator == "kahan") return consistent_problem(kahan_matrix(p.m, p.n, p.theta), cell.seed, "kahan");
    if (p.generator == "vandermonde")
        return consistent_problem(vandermonde_scaled(p.m, p.n, default_vandermonde_scales(p.n)), cell.seed,
                                  "vandermonde");
    return load_problem(p.input);
}

/// Outcome of one (cell, solver) run alongside its trace rows.
struct ExperimentRun {
    std::string solver;
    std::uint64_t seed = 0;
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<ExperimentRecord> records;
};

inline ExperimentRun run_cell(const ExperimentConfig& cfg, const LsProblem& prob, SolverKind kind,
                              std::uint64_t seed) {
    TraceOptions trace;
    trace.enabled = true;
    if (cfg.forward_error && prob.xstar && norm2(*prob.xstar) > 0.0) trace.xstar = prob.xstar;
    const bool be = cfg.backward_error && prob.rows() <= cfg.backward_error_cap;
    trace.backward_error = be;

    SolveReport rep = solve(kind, prob.a, prob.b, cfg.solver, seed, trace);
    // The final iterate always gets a backward error, on or off the schedule.
    if (be && !rep.trace.empty() && !rep.trace.back().backward_error)
        rep.trace.back().backward_error = optimal_backward_error(prob.a, prob.b, rep.x);

    ExperimentRun run;
    run.solver = to_string(kind);
    run.seed = seed;
    run.converged = rep.converged;
    run.iterations = rep.iterations();
    for (const auto& t : rep.trace) {
        ExperimentRecord r;
        r.solver = run.solver;
        r.seed = seed;
        r.iteration = t.iteration;
        if (!std::isnan(t.rel_residual)) r.rel_residual = t.rel_residual;
        r.fwd_error = t.fwd_error;
        r.backward_error = t.backward_error;
        r.kappa = prob.kappa_by_construction;
        r.noise_norm = prob.noise_norm;
        if (cfg.timing) r.wall_time = rep.wall_time;
        run.records.push_back(std::move(r));
    }
    return run;
}

/// Runs every (cell x solver) pair; rows come back in grid order regardless
/// of thread scheduling.
inline std::vector<ExperimentRun> run_experiment_detailed(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto cells = experiment_cells(cfg);
    std::vector<ExperimentRun> runs(cells.size() * cfg.solvers.size());
    parallel_for(cells.size(), cfg.threads, [&](std::size_t c) {
        const LsProblem prob = make_cell_problem(cfg, cells[c]);
        for (std::size_t s = 0; s < cfg.solvers.size(); ++s)
            runs[c * cfg.solvers.size() + s] = run_cell(cfg, prob, cfg.solvers[s], cells[c].seed);
    });
    return runs;
}

inline std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg) {
    std::vector<ExperimentRecord> out;
    for (auto& run : run_experiment_detailed(cfg))
        for (auto& r : run.records) out.push_back(std::move(r));
    return out;
}

struct BenchConfig {
    std::vector<std::pair<std::size_t, std::size_t>> sizes{{500, 50}};
    std::vector<SolverKind> solvers{SolverKind::sap, SolverKind::saa, SolverKind::hhqr_direct};
    double kappa = 1e10;
    double noise = 1e-14;
    std::size_t repeats = 3;
    std::uint64_t seed = 1;
    SolverConfig solver;

    void validate() const {
        if (sizes.empty()) throw ConfigError("sizes", "must not be empty");
        for (const auto& [m, n] : sizes)
            if (n < 1 || m <= n) throw ConfigError("sizes", "each size needs m > n >= 1");
        if (solvers.empty()) throw ConfigError("solvers", "must name at least one solver");
        if (repeats < 1) throw ConfigError("repeats", "must be >= 1");
        if (!(kappa >= 1.0)) throw ConfigError("kappa", "must be >= 1");
        if (!(noise >= 0.0)) throw ConfigError("noise", "must be >= 0");
    }
};

struct BenchRow {
    std::string solver;
    std::size_t m = 0, n = 0;
    double best_time = 0.0;  ///< minimum wall time over the repeats
    std::size_t iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
    bool reproducible = true;  ///< every repeat returned a bitwise-identical x
};

/// Sequential on purpose: concurrent runs would distort the timings.
inline std::vector<BenchRow> bench(const BenchConfig& cfg) {
    cfg.validate();
    std::vector<BenchRow> rows;
    for (std::size_t g = 0; g < cfg.sizes.size(); ++g) {
        const auto [m, n] = cfg.sizes[g];
        const std::uint64_t seed = derive_seed(cfg.seed, g);
        const LsProblem prob = gen_random_ls(m, n, cfg.kappa, cfg.noise, seed);
        for (SolverKind kind : cfg.solvers) {
            BenchRow row;
            row.solver = to_string(kind);
            row.m = m;
            row.n = n;
            row.best_time = std::numeric_limits<double>::infinity();
            Vector first;
            for (std::size_t k = 0; k < cfg.repeats; ++k) {
                const SolveReport rep = solve(kind, prob.a, prob.b, cfg.solver, seed);
                row.best_time = std::min(row.best_time, rep.wall_time);
                if (k == 0) {
                    first = rep.x;
                    row.iterations = rep.iterations();
                    row.rel_residual = relative_residual(prob.a, prob.b, rep.x);
                    row.converged = rep.converged;
                } else if (rep.x != first) {
                    row.reproducible = false;
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline void write_bench_table(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "solver,m,n,best_time_s,iterations,rel_residual,converged,reproducible\n";
    for (const auto& r : rows)
        out << r.solver << ',' << r.m << ',' << r.n << ',' << format_double(r.best_time) << ',' << r.iterations
            << ',' << format_double(r.rel_residual) << ',' << (r.converged ? 1 : 0) << ','
            << (r.reproducible ? 1 : 0) << '\n';
}

} // namespace sketchls
