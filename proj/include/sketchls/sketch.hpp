#pragma once

// Sketch operators S in R^{s x m}: dense Gaussian, and the subsampled
// randomized cosine transform S = sqrt(m/s) * Sample * DCT * diag(signs).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dct.hpp"
#include "random.hpp"

namespace sketchls {

enum class SketchKind { gaussian, srct, dense };

inline const char* to_string(SketchKind k) noexcept {
    switch (k) {
    case SketchKind::gaussian: return "gaussian";
    case SketchKind::srct: return "srct";
    case SketchKind::dense: return "dense";
    }
    return "?";
}

struct SketchOperator {
    SketchKind kind = SketchKind::srct;
    std::size_t s = 0;
    std::size_t m = 0;
    std::optional<DenseMatrix> gaussian_data;   // gaussian / dense: s x m
    std::vector<double> signs;                  // srct: +-1, length m
    std::vector<std::size_t> sample_indices;    // srct: s distinct rows of F, ascending
    double scale = 1.0;                         // srct: sqrt(m / s)
};

namespace detail {

inline void check_sketch_dims(std::size_t s, std::size_t m, const char* who) {
    if (s == 0 || s >= m)
        throw DimensionError(std::string(who) + ": need 0 < s < m, got s=" + std::to_string(s) +
                             ", m=" + std::to_string(m));
}

} // namespace detail

/// i.i.d. N(0, 1/s) entries.
inline SketchOperator make_gaussian_sketch(std::size_t s, std::size_t m, Rng& rng) {
    detail::check_sketch_dims(s, m, "make_gaussian_sketch");
    SketchOperator op;
    op.kind = SketchKind::gaussian;
    op.s = s;
    op.m = m;
    op.gaussian_data = gaussian_matrix(s, m, rng, 1.0 / std::sqrt(static_cast<double>(s)));
    return op;
}

/// Random signs, then s rows of the orthonormal DCT sampled uniformly without
/// replacement, scaled by sqrt(m/s) so that E[S^T S] = I.
inline SketchOperator make_srct_sketch(std::size_t s, std::size_t m, Rng& rng) {
    detail::check_sketch_dims(s, m, "make_srct_sketch");
    SketchOperator op;
    op.kind = SketchKind::srct;
    op.s = s;
    op.m = m;
    op.scale = std::sqrt(static_cast<double>(m) / static_cast<double>(s));

    std::bernoulli_distribution coin(0.5);
    op.signs.resize(m);
    for (double& d : op.signs) d = coin(rng) ? 1.0 : -1.0;

    // Partial Fisher-Yates.
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < s; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, m - 1);
        std::swap(perm[i], perm[pick(rng)]);
    }
    op.sample_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(s));
    std::ranges::sort(op.sample_indices);
    return op;
}

/// Wraps an explicit s x m matrix (used for diagnostics and tests).
inline SketchOperator make_dense_sketch(DenseMatrix s_matrix) {
    detail::check_sketch_dims(s_matrix.rows(), s_matrix.cols(), "make_dense_sketch");
    SketchOperator op;
    op.kind = SketchKind::dense;
    op.s = s_matrix.rows();
    op.m = s_matrix.cols();
    op.gaussian_data = std::move(s_matrix);
    return op;
}

inline SketchOperator make_sketch(SketchKind kind, std::size_t s, std::size_t m, Rng& rng) {
    switch (kind) {
    case SketchKind::gaussian: return make_gaussian_sketch(s, m, rng);
    case SketchKind::srct: return make_srct_sketch(s, m, rng);
    case SketchKind::dense: break;
    }
    throw std::invalid_argument("make_sketch: dense sketches need explicit data");
}

/// B = S A (s x n).
inline DenseMatrix apply_sketch(const SketchOperator& sk, const DenseMatrix& a) {
    if (a.rows() != sk.m)
        throw DimensionError("apply_sketch: sketch has m=" + std::to_string(sk.m) +
                             " but A has " + std::to_string(a.rows()) + " rows");
    if (sk.kind != SketchKind::srct) return matmul(*sk.gaussian_data, a);

    const std::size_t m = sk.m, n = a.cols();
    DenseMatrix out(sk.s, n);
    if (n == 0) return out;

    // Columns are transformed in batches to bound the scratch buffer.
    const std::size_t batch = std::min<std::size_t>(n, 32);
    auto buf = detail::make_fftw_buffer(m * batch);
    auto plan = detail::make_dct_plan(buf.get(), m, batch);
    detail::FftwPlan tail_plan;

    for (std::size_t j0 = 0; j0 < n; j0 += batch) {
        const std::size_t nb = std::min(batch, n - j0);
        for (std::size_t jj = 0; jj < nb; ++jj) {
            const auto src = a.col(j0 + jj);
            double* dst = buf.get() + jj * m;
            for (std::size_t i = 0; i < m; ++i) dst[i] = sk.signs[i] * src[i];
        }
        if (nb == batch) {
            fftw_execute(plan.get());
        } else {
            if (!tail_plan) tail_plan = detail::make_dct_plan(buf.get(), m, nb);
            fftw_execute(tail_plan.get());
        }
        for (std::size_t jj = 0; jj < nb; ++jj) {
            std::span<double> col(buf.get() + jj * m, m);
            detail::normalize_dct(col);
            auto dst = out.col(j0 + jj);
            for (std::size_t r = 0; r < sk.s; ++r) dst[r] = sk.scale * col[sk.sample_indices[r]];
        }
    }
    return out;
}

/// S as an explicit s x m matrix (S applied to I_m).
inline DenseMatrix materialize(const SketchOperator& sk) {
    if (sk.kind != SketchKind::srct) return *sk.gaussian_data;
    return apply_sketch(sk, DenseMatrix::identity(sk.m));
}

/// ||S||_2. Exact for SRCT (rows are orthonormal up to the sqrt(m/s) scale);
/// power iteration on S^T S for explicit sketches.
inline double sketch_norm(const SketchOperator& sk, int power_iterations = 200) {
    if (sk.kind == SketchKind::srct) return sk.scale;
    const DenseMatrix& s = *sk.gaussian_data;
    Vector v(sk.m, 1.0 / std::sqrt(static_cast<double>(sk.m)));
    for (std::size_t i = 0; i < sk.m; ++i) v[i] *= (i % 2 == 0) ? 1.0 : 0.75;
    double lambda = 0.0;
    for (int it = 0; it < power_iterations; ++it) {
        const double vn = norm2(v);
        if (vn == 0.0) return 0.0;
        scale(1.0 / vn, v);
        Vector w = matvec_transpose(s, matvec(s, v));
        lambda = dot(v, w);
        v = std::move(w);
    }
    return std::sqrt(lambda);
}

} // namespace sketchls
