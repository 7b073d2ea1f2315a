#pragma once

#include <cstdint>
#include <random>

#include "qr.hpp"

namespace sketchls {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent child seeds.
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of child stream `index` under `root`. Distinct (root, index) pairs give
/// unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(root) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Purposes for child streams inside one solve.
enum class Stream : std::uint64_t { sketch = 1, smoothing = 2, problem = 3 };

inline Rng make_rng(std::uint64_t seed, Stream purpose) {
    return Rng(derive_seed(seed, static_cast<std::uint64_t>(purpose)));
}

inline void fill_gaussian(std::span<double> out, Rng& rng, double stddev = 1.0) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : out) v = dist(rng);
}

inline Vector gaussian_vector(std::size_t n, Rng& rng) {
    Vector v(n);
    fill_gaussian(v, rng);
    return v;
}

inline DenseMatrix gaussian_matrix(std::size_t m, std::size_t n, Rng& rng, double stddev = 1.0) {
    DenseMatrix g(m, n);
    fill_gaussian(g.data(), rng, stddev);
    return g;
}

/// Haar-distributed m x n matrix with orthonormal columns: QR of an i.i.d.
/// Gaussian matrix with each column of Q multiplied by the sign of R's
/// matching diagonal entry.
inline DenseMatrix haar_orthonormal(std::size_t m, std::size_t n, Rng& rng) {
    if (m < n) throw DimensionError("haar_orthonormal: requires m >= n");
    const QrFactors f = householder_qr(gaussian_matrix(m, n, rng));
    DenseMatrix q = f.form_q();
    for (std::size_t j = 0; j < n; ++j)
        if (f.r(j, j) < 0.0) scale(-1.0, q.col(j));
    return q;
}

} // namespace sketchls
