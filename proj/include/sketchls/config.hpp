#pragma once

// JSON configuration files for experiments and benchmarks. Unknown keys are
// rejected so typos do not silently fall back to defaults.

#include <fstream>
#include <set>

#include <json.hpp>

#include "experiment.hpp"

namespace sketchls {

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
}

template <class T>
void read_field(const json& obj, const char* key, const std::string& where, T& dst) {
    if (!obj.contains(key)) return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where.empty() ? key : where + "." + key, e.what());
    }
}

inline const json& object_at(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_object()) throw ConfigError(where.empty() ? key : where + "." + key, "expected an object");
    return v;
}

inline std::vector<SolverKind> parse_solver_list(const json& v) {
    if (!v.is_array()) throw ConfigError("solvers", "expected an array of names");
    std::vector<SolverKind> out;
    for (const auto& s : v) {
        if (!s.is_string()) throw ConfigError("solvers", "expected solver names");
        out.push_back(parse_solver(s.get<std::string>()));
    }
    return out;
}

inline void parse_solver_config(const json& j, SolverConfig& cfg) {
    if (j.contains("sketch")) {
        const json& sk = object_at(j, "sketch", "");
        reject_unknown(sk, "sketch", {"kind", "oversampling", "rows"});
        if (sk.contains("kind")) {
            std::string kind;
            read_field(sk, "kind", "sketch", kind);
            cfg.sketch.kind = parse_sketch_kind(kind);
        }
        read_field(sk, "oversampling", "sketch", cfg.sketch.oversampling);
        read_field(sk, "rows", "sketch", cfg.sketch.rows);
    }
    if (j.contains("lsqr")) {
        const json& l = object_at(j, "lsqr", "");
        reject_unknown(l, "lsqr", {"tol", "maxit"});
        read_field(l, "tol", "lsqr", cfg.lsqr.tol);
        read_field(l, "maxit", "lsqr", cfg.lsqr.maxit);
    }
    if (j.contains("sigma")) {
        const json& s = object_at(j, "sigma", "");
        reject_unknown(s, "sigma", {"rule", "value"});
        std::string rule = "recommended";
        read_field(s, "rule", "sigma", rule);
        if (rule == "recommended") cfg.sigma.kind = SigmaRule::Kind::recommended;
        else if (rule == "conservative") cfg.sigma.kind = SigmaRule::Kind::conservative;
        else if (rule == "fixed") cfg.sigma.kind = SigmaRule::Kind::fixed;
        else throw ConfigError("sigma.rule", "expected recommended, conservative or fixed");
        read_field(s, "value", "sigma", cfg.sigma.value);
    }
}

} // namespace detail

/// Keys: problem{generator,m,n,kappas,noises,theta,input}, solvers, sketch{kind,
/// oversampling,rows}, lsqr{tol,maxit}, sigma{rule,value}, seed, replicates,
/// metrics{forward_error,backward_error}, backward_error_cap, timing, threads, output.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j, ExperimentConfig cfg = {}) {
    using detail::read_field;
    if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
    detail::reject_unknown(j, "",
                           {"problem", "solvers", "sketch", "lsqr", "sigma", "seed", "replicates", "metrics",
                            "backward_error_cap", "timing", "threads", "output"});
    if (j.contains("problem")) {
        const auto& p = detail::object_at(j, "problem", "");
        detail::reject_unknown(p, "problem", {"generator", "m", "n", "kappas", "noises", "theta", "input"});
        read_field(p, "generator", "problem", cfg.problem.generator);
        read_field(p, "m", "problem", cfg.problem.m);
        read_field(p, "n", "problem", cfg.problem.n);
        read_field(p, "kappas", "problem", cfg.problem.kappas);
        read_field(p, "noises", "problem", cfg.problem.noises);
        read_field(p, "theta", "problem", cfg.problem.theta);
        read_field(p, "input", "problem", cfg.problem.input);
    }
    if (j.contains("solvers")) cfg.solvers = detail::parse_solver_list(j.at("solvers"));
    detail::parse_solver_config(j, cfg.solver);
    read_field(j, "seed", "", cfg.seed);
    read_field(j, "replicates", "", cfg.replicates);
    if (j.contains("metrics")) {
        const auto& m = detail::object_at(j, "metrics", "");
        detail::reject_unknown(m, "metrics", {"forward_error", "backward_error"});
        read_field(m, "forward_error", "metrics", cfg.forward_error);
        read_field(m, "backward_error", "metrics", cfg.backward_error);
    }
    read_field(j, "backward_error_cap", "", cfg.backward_error_cap);
    read_field(j, "timing", "", cfg.timing);
    read_field(j, "threads", "", cfg.threads);
    read_field(j, "output", "", cfg.output);
    return cfg;
}

/// Keys: sizes [[m, n], ...], solvers, kappa, noise, repeats, seed, sketch, lsqr, sigma.
inline BenchConfig parse_bench_config(const nlohmann::json& j, BenchConfig cfg = {}) {
    using detail::read_field;
    if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
    detail::reject_unknown(j, "", {"sizes", "solvers", "kappa", "noise", "repeats", "seed", "sketch", "lsqr", "sigma"});
    read_field(j, "sizes", "", cfg.sizes);
    if (j.contains("solvers")) cfg.solvers = detail::parse_solver_list(j.at("solvers"));
    read_field(j, "kappa", "", cfg.kappa);
    read_field(j, "noise", "", cfg.noise);
    read_field(j, "repeats", "", cfg.repeats);
    read_field(j, "seed", "", cfg.seed);
    detail::parse_solver_config(j, cfg.solver);
    return cfg;
}

inline nlohmann::json read_json_file(const std::string& path) {
    auto in = detail::open_in(path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path, e.what());
    }
}

} // namespace sketchls
