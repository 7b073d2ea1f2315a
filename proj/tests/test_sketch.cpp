#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <sketchls/bounds.hpp>
#include <sketchls/sketch.hpp>

using namespace sketchls;

namespace {

constexpr double u = unit_roundoff;

// Orthonormal DCT-II evaluated straight from its definition, in long double.
std::vector<double> dct_reference(const std::vector<double>& x) {
    const std::size_t m = x.size();
    std::vector<double> y(m);
    for (std::size_t k = 0; k < m; ++k) {
        long double s = 0.0L;
        for (std::size_t i = 0; i < m; ++i)
            s += x[i] * std::cos(std::numbers::pi_v<long double> * k * (2.0L * i + 1.0L) / (2.0L * m));
        const long double c = k == 0 ? std::sqrt(1.0L / m) : std::sqrt(2.0L / m);
        y[k] = static_cast<double>(c * s);
    }
    return y;
}

double mean_diag_sts(SketchKind kind, std::size_t s, std::size_t m, int seeds, double* worst_offdiag) {
    DenseMatrix acc(m, m);
    for (int t = 0; t < seeds; ++t) {
        Rng rng(static_cast<std::uint64_t>(t) + 1);
        const DenseMatrix sm = materialize(make_sketch(kind, s, m, rng));
        acc = add(acc, matmul_transpose_left(sm, sm));
    }
    double diag = 0.0, off = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double v = acc(i, j) / seeds;
            if (i == j) diag += v;
            else off = std::max(off, std::abs(v));
        }
    if (worst_offdiag) *worst_offdiag = off;
    return diag / m;
}

} // namespace

TEST(Dct, MatchesDirectFormula) {
    for (std::size_t m : {7u, 64u, 100u}) {
        Rng rng(m);
        const Vector x = gaussian_vector(m, rng);
        const Vector y = dct(x);
        const auto ref = dct_reference(x);
        double err = 0.0;
        for (std::size_t k = 0; k < m; ++k) err = std::max(err, std::abs(y[k] - ref[k]));
        EXPECT_LE(err, 10.0 * m * u * norm2(x)) << "m=" << m;
    }
}

TEST(Dct, PreservesNorm) {
    for (std::size_t m : {7u, 64u, 100u}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            Rng rng(seed * 1000 + m);
            const Vector x = gaussian_vector(m, rng);
            EXPECT_NEAR(norm2(dct(x)), norm2(x), 10.0 * m * u * norm2(x)) << "m=" << m;
        }
    }
}

TEST(Dct, ColumnsTransformIndependently) {
    Rng rng(3);
    const DenseMatrix a = gaussian_matrix(33, 4, rng);
    const DenseMatrix f = dct_columns(a);
    for (std::size_t j = 0; j < 4; ++j) {
        const Vector y = dct(a.col(j));
        for (std::size_t i = 0; i < 33; ++i) EXPECT_EQ(f(i, j), y[i]);
    }
}

TEST(GaussianSketch, ReproducibleUnderSeed) {
    Rng r1(42), r2(42);
    const auto a = make_gaussian_sketch(2, 4, r1);
    const auto b = make_gaussian_sketch(2, 4, r2);
    EXPECT_EQ(a.gaussian_data->storage(), b.gaussian_data->storage());
}

TEST(GaussianSketch, EntryVariance) {
    double sum = 0.0, sum2 = 0.0;
    const int draws = 10000;
    for (int t = 0; t < draws; ++t) {
        Rng rng(static_cast<std::uint64_t>(t));
        const auto sk = make_gaussian_sketch(2, 4, rng);
        for (double v : sk.gaussian_data->storage()) {
            sum += v;
            sum2 += v * v;
        }
    }
    const double count = draws * 8.0;
    const double mean = sum / count;
    EXPECT_NEAR(sum2 / count - mean * mean, 0.5, 0.05 * 0.5);
}

TEST(GaussianSketch, ExpectedGramIsIdentity) {
    double off = 0.0;
    EXPECT_NEAR(mean_diag_sts(SketchKind::gaussian, 4, 16, 1000, &off), 1.0, 0.1);
    EXPECT_LT(off, 0.1);
}

TEST(GaussianSketch, SizeBoundary) {
    Rng rng(1);
    EXPECT_NO_THROW(make_gaussian_sketch(9, 10, rng));
    EXPECT_THROW(make_gaussian_sketch(10, 10, rng), DimensionError);
    EXPECT_THROW(make_gaussian_sketch(0, 10, rng), DimensionError);
}

TEST(GaussianSketch, ApplyToIdentityReturnsData) {
    Rng rng(8);
    const auto sk = make_gaussian_sketch(5, 12, rng);
    const DenseMatrix sa = apply_sketch(sk, DenseMatrix::identity(12));
    EXPECT_EQ(sa.storage(), sk.gaussian_data->storage());
}

TEST(SrctSketch, AllButOneIndexSampled) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const auto sk = make_srct_sketch(15, 16, rng);
        const std::set<std::size_t> idx(sk.sample_indices.begin(), sk.sample_indices.end());
        EXPECT_EQ(idx.size(), 15u);
        EXPECT_LT(*idx.rbegin(), 16u);
        EXPECT_TRUE(std::is_sorted(sk.sample_indices.begin(), sk.sample_indices.end()));
    }
}

TEST(SrctSketch, SignsAndScale) {
    Rng rng(4);
    const auto sk = make_srct_sketch(10, 40, rng);
    ASSERT_EQ(sk.signs.size(), 40u);
    for (double s : sk.signs) EXPECT_EQ(std::abs(s), 1.0);
    EXPECT_DOUBLE_EQ(sk.scale, 2.0);
}

TEST(SrctSketch, SizeBoundary) {
    Rng rng(1);
    EXPECT_NO_THROW(make_srct_sketch(99, 100, rng));
    EXPECT_THROW(make_srct_sketch(100, 100, rng), DimensionError);
}

TEST(SrctSketch, ZeroMatrixMapsToZero) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const auto sk = make_srct_sketch(7, 30, rng);
        const DenseMatrix sa = apply_sketch(sk, DenseMatrix(30, 3));
        for (double v : sa.storage()) EXPECT_EQ(v, 0.0);
    }
}

TEST(SrctSketch, MatchesMaterializedOperator) {
    Rng rng(12);
    const auto sk = make_srct_sketch(9, 50, rng);
    Rng ar(13);
    const DenseMatrix a = gaussian_matrix(50, 4, ar);
    const DenseMatrix fast = apply_sketch(sk, a);
    const DenseMatrix slow = matmul(materialize(sk), a);
    EXPECT_LE(frobenius_norm(add(fast, slow, -1.0)), 100.0 * 50 * u * frobenius_norm(a));
}

TEST(SrctSketch, ColumnIsotropy) {
    const std::size_t m = 64, s = 16;
    DenseMatrix e1(m, 1);
    e1(0, 0) = 1.0;
    double sum = 0.0;
    const int seeds = 2000;
    for (int t = 0; t < seeds; ++t) {
        Rng rng(static_cast<std::uint64_t>(t));
        const DenseMatrix y = apply_sketch(make_srct_sketch(s, m, rng), e1);
        sum += dot(y.col(0), y.col(0));
    }
    EXPECT_NEAR(sum / seeds, 1.0, 0.05);
}

TEST(SrctSketch, ExpectedGramIsIdentity) {
    double off = 0.0;
    EXPECT_NEAR(mean_diag_sts(SketchKind::srct, 4, 16, 1000, &off), 1.0, 0.1);
    EXPECT_LT(off, 0.1);
}

TEST(SrctSketch, SmallEmbeddingDistortion) {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const DenseMatrix q = haar_orthonormal(64, 8, rng);
        const auto sk = make_srct_sketch(16, 64, rng);
        ok += sketch_distortion(sk, q).kappa_sqa <= 10.0;
    }
    EXPECT_EQ(ok, 100);
}

TEST(SrctSketch, EmbeddingAtDefaultOversampling) {
    // m = 2000, n = 100, s = 800; at most one failure allowed in 100 seeds
    // against kappa < 49, and at most five against kappa <= 10.
    const std::size_t m = 2000, n = 100, s = 800;
    int under49 = 0, under10 = 0;
    const int seeds = 100;
    for (int t = 0; t < seeds; ++t) {
        Rng rng(derive_seed(2024, static_cast<std::uint64_t>(t)));
        const DenseMatrix q = haar_orthonormal(m, n, rng);
        const auto sk = make_srct_sketch(s, m, rng);
        const double k = sketch_distortion(sk, q).kappa_sqa;
        under49 += k < 49.0;
        under10 += k <= 10.0;
    }
    EXPECT_GE(under49, 99);
    EXPECT_GE(under10, 95);
}

TEST(Sketch, DimensionMismatchOnApply) {
    Rng rng(1);
    const auto sk = make_srct_sketch(3, 10, rng);
    EXPECT_THROW(apply_sketch(sk, DenseMatrix(11, 2)), DimensionError);
}
