#pragma once

// Orthonormal DCT-II of length m applied to every column of a column-major
// block, backed by FFTW's REDFT10 (any m, O(m log m)).

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <new>
#include <span>
#include <stdexcept>
#include <type_traits>

#include "dense.hpp"

namespace sketchls {

namespace detail {

// The FFTW planner is not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex mu;
    return mu;
}

struct FftwBufferDeleter {
    void operator()(double* p) const noexcept { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<double[], FftwBufferDeleter>;

struct FftwPlanDeleter {
    void operator()(fftw_plan p) const noexcept {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};
using FftwPlan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, FftwPlanDeleter>;

inline FftwBuffer make_fftw_buffer(std::size_t count) {
    auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * std::max<std::size_t>(count, 1)));
    if (p == nullptr) throw std::bad_alloc();
    return FftwBuffer(p);
}

/// In-place REDFT10 plan for `howmany` contiguous columns of length m.
inline FftwPlan make_dct_plan(double* buf, std::size_t m, std::size_t howmany) {
    const int n = static_cast<int>(m);
    const fftw_r2r_kind kind = FFTW_REDFT10;
    std::lock_guard lock(fftw_planner_mutex());
    // FFTW_ESTIMATE: no timing-based plan selection, so results are reproducible.
    fftw_plan p = fftw_plan_many_r2r(1, &n, static_cast<int>(howmany), buf, nullptr, 1, n, buf,
                                     nullptr, 1, n, &kind, FFTW_ESTIMATE);
    if (p == nullptr) throw std::runtime_error("fftw: failed to create REDFT10 plan");
    return FftwPlan(p);
}

/// Converts FFTW's unnormalized REDFT10 output to the orthonormal DCT-II.
inline void normalize_dct(std::span<double> col) {
    const double m = static_cast<double>(col.size());
    col[0] *= 0.5 / std::sqrt(m);
    const double s = 1.0 / std::sqrt(2.0 * m);
    for (std::size_t k = 1; k < col.size(); ++k) col[k] *= s;
}

} // namespace detail

/// Orthonormal DCT-II of each column of `a` (F^T F = I).
inline DenseMatrix dct_columns(const DenseMatrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    DenseMatrix out(m, n);
    if (m == 0 || n == 0) return out;
    auto buf = detail::make_fftw_buffer(m * n);
    std::ranges::copy(a.data(), buf.get());
    auto plan = detail::make_dct_plan(buf.get(), m, n);
    fftw_execute(plan.get());
    std::copy_n(buf.get(), m * n, out.data().begin());
    for (std::size_t j = 0; j < n; ++j) detail::normalize_dct(out.col(j));
    return out;
}

inline Vector dct(std::span<const double> x) {
    DenseMatrix a(x.size(), 1, Vector(x.begin(), x.end()));
    return dct_columns(a).storage();
}

} // namespace sketchls
