#pragma once

// Dense matrices as CSV (one row per line), shortest round-trip number
// formatting shared by every CSV writer, and problems stored as CSV files
// described by a JSON sidecar.

#include <cerrno>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

#include <json.hpp>

#include "dense.hpp"
#include "errors.hpp"
#include "problems.hpp"

namespace sketchls {

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    return v;
}

namespace detail {

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path);
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot open " + path + " for writing");
    return out;
}

inline void check_written(std::ostream& out, const std::string& path) {
    out.flush();
    if (!out) throw std::system_error(errno, std::generic_category(), "write failed: " + path);
}

} // namespace detail

inline void write_matrix_csv(std::ostream& out, const DenseMatrix& a) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (j) out << ',';
            out << format_double(a(i, j));
        }
        out << '\n';
    }
}

inline void write_matrix_csv(const std::string& path, const DenseMatrix& a) {
    auto out = detail::open_out(path);
    write_matrix_csv(out, a);
    detail::check_written(out, path);
}

/// Blank lines are skipped; every row must have the same number of fields.
inline DenseMatrix read_matrix_csv(std::istream& in, const std::string& name = "<stream>") {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            try {
                row.push_back(parse_double(rest.substr(0, comma)));
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument(name + ":" + std::to_string(lineno) + ": " + e.what());
            }
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw DimensionError(name + ":" + std::to_string(lineno) + ": expected " +
                                 std::to_string(rows.front().size()) + " fields, got " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    return DenseMatrix::from_rows(rows);
}

inline DenseMatrix read_matrix_csv(const std::string& path) {
    auto in = detail::open_in(path);
    return read_matrix_csv(in, path);
}

/// A vector is stored as a one-column matrix.
inline Vector read_vector_csv(const std::string& path) {
    const DenseMatrix v = read_matrix_csv(path);
    if (v.cols() != 1 && v.rows() != 1) throw DimensionError(path + ": expected a single row or column");
    return Vector(v.storage().begin(), v.storage().end());
}

inline void write_vector_csv(const std::string& path, std::span<const double> v) {
    auto out = detail::open_out(path);
    for (double x : v) out << format_double(x) << '\n';
    detail::check_written(out, path);
}

/// Writes <prefix>_A.csv, <prefix>_b.csv, optionally <prefix>_xstar.csv, and
/// the sidecar <prefix>.json referencing them by file name.
inline std::string save_problem(const std::string& prefix, const LsProblem& p) {
    namespace fs = std::filesystem;
    const fs::path base(prefix);
    const std::string stem = base.filename().string();
    const fs::path dir = base.parent_path();
    auto at = [&](const std::string& name) { return (dir / name).string(); };

    write_matrix_csv(at(stem + "_A.csv"), p.a);
    write_vector_csv(at(stem + "_b.csv"), p.b);
    nlohmann::json meta = {{"rows", p.rows()},       {"cols", p.cols()},        {"generator", p.generator},
                           {"seed", p.seed},         {"noise_norm", p.noise_norm}, {"matrix", stem + "_A.csv"},
                           {"rhs", stem + "_b.csv"}};
    if (p.kappa_by_construction) meta["kappa"] = *p.kappa_by_construction;
    if (p.xstar) {
        write_vector_csv(at(stem + "_xstar.csv"), *p.xstar);
        meta["xstar"] = stem + "_xstar.csv";
    }
    const std::string sidecar = at(stem + ".json");
    auto out = detail::open_out(sidecar);
    out << meta.dump(2) << '\n';
    detail::check_written(out, sidecar);
    return sidecar;
}

/// File names in the sidecar are resolved relative to the sidecar's directory.
inline LsProblem load_problem(const std::string& sidecar_path) {
    namespace fs = std::filesystem;
    auto in = detail::open_in(sidecar_path);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(sidecar_path, e.what());
    }
    const fs::path dir = fs::path(sidecar_path).parent_path();
    auto path_of = [&](const char* key) {
        if (!meta.contains(key) || !meta[key].is_string()) throw ConfigError(key, "missing file name in " + sidecar_path);
        return (dir / meta[key].get<std::string>()).string();
    };
    LsProblem p;
    p.a = read_matrix_csv(path_of("matrix"));
    p.b = read_vector_csv(path_of("rhs"));
    if (p.b.size() != p.a.rows()) throw DimensionError(sidecar_path + ": rhs length does not match matrix rows");
    if (meta.contains("xstar")) {
        p.xstar = read_vector_csv(path_of("xstar"));
        if (p.xstar->size() != p.a.cols()) throw DimensionError(sidecar_path + ": xstar length does not match columns");
    }
    try {
        if (meta.contains("rows") && meta["rows"].get<std::size_t>() != p.a.rows())
            throw DimensionError(sidecar_path + ": rows disagrees with the matrix file");
        if (meta.contains("cols") && meta["cols"].get<std::size_t>() != p.a.cols())
            throw DimensionError(sidecar_path + ": cols disagrees with the matrix file");
        p.generator = meta.value("generator", std::string("file"));
        p.seed = meta.value("seed", std::uint64_t{0});
        p.noise_norm = meta.value("noise_norm", 0.0);
        if (meta.contains("kappa")) p.kappa_by_construction = meta["kappa"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(sidecar_path, e.what());
    }
    return p;
}

} // namespace sketchls
