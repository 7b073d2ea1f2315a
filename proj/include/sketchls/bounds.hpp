#pragma once

// Evaluates the rounding-error quantities that govern the conditioning of the
// computed preconditioned matrix Y = fl(A R^{-1}): kappa(S Q_A), k(S), C_1,
// the epsilon bounds, phi(R), and the right-hand sides of the kappa(Y) and
// backward-error bounds, plus the assumption flags that make them apply.
//
// The rounding-error matrices themselves (E, Delta Y, Delta Yhat) are not
// observable; only their bounds are reported. delta_a_bound models ||Delta Yhat||
// as u ||Yhat||_2, i.e. LSQR on Yhat treated as backward stable.

#include <cmath>
#include <limits>
#include <optional>

#include "sketch.hpp"
#include "svd.hpp"

namespace sketchls {

struct SketchDistortion {
    double kappa_sqa = 0.0;      ///< kappa_2(S Q_A)
    double sigma_min_sqa = 0.0;  ///< sigma_min(S Q_A) = 1 / ||(S Q_A)^+||_2
    double norm_s = 0.0;         ///< ||S||_2
    double k_s = 0.0;            ///< ||S||_2 ||(S Q_A)^+||_2
};

/// Q_A must have orthonormal columns spanning range(A).
inline SketchDistortion sketch_distortion(const SketchOperator& sk, const DenseMatrix& qa) {
    const auto sv = singular_values(apply_sketch(sk, qa));
    SketchDistortion d;
    d.sigma_min_sqa = sv.back();
    d.kappa_sqa = sv.back() > 0.0 ? sv.front() / sv.back() : std::numeric_limits<double>::infinity();
    d.norm_s = sketch_norm(sk);
    d.k_s = sv.back() > 0.0 ? d.norm_s / sv.back() : std::numeric_limits<double>::infinity();
    return d;
}

inline DenseMatrix orthonormal_range_basis(const DenseMatrix& a) { return householder_qr(a).form_q(); }

struct BoundReport {
    std::size_t m = 0, n = 0, s = 0;
    double gamma_tilde_constant = 10.0;  ///< c in gamma-tilde_k = c k u / (1 - c k u)

    double kappa_A = 0.0;
    double norm_A = 0.0;
    double kappa_SQA = 0.0;
    double norm_S = 0.0;
    double k_S = 0.0;
    double C1 = 0.0;
    double eps1_bound = 0.0;
    double eps2_bound = 0.0;
    double kappa_Rhat = 0.0;
    double phi_Rhat = 0.0;
    double yhat_kappa_bound = 0.0;  ///< 4 kappa(S Q_A) + 1
    double kappa_Yhat_measured = 0.0;
    double norm_Yhat = 0.0;
    double delta_a_bound = 0.0;  ///< bound on ||Delta A||_2 for the sketch-and-apply solution
    double sigma_conservative = 0.0;

    bool dims_and_embedding_ok = false;  ///< kappa(SQ_A) < 49, n^2 u < 1/201, m/n + sqrt(n) > 200
    bool kappa_small_enough = false;     ///< kappa(A) < 1 / (3 C1 k(S))
    bool smoothing_assumptions = false;  ///< kappa(SQ_A) < 49, m/n + sqrt(n) > 200, s m u < 1/67

    /// All hypotheses of the kappa(Yhat) <= 4 kappa(SQ_A) + 1 bound hold.
    bool yhat_bound_applies() const noexcept { return dims_and_embedding_ok && kappa_small_enough; }
};

inline double constant_c1(std::size_t m, std::size_t n, std::size_t s, double c = 10.0) {
    const double sn = std::sqrt(static_cast<double>(s) * static_cast<double>(n));
    const double gm = gamma(static_cast<double>(m));
    return sn * gm + std::sqrt(static_cast<double>(n)) *
                         gamma_tilde(static_cast<double>(s) * static_cast<double>(n), c) * (1.0 + sn * gm);
}

/// `known_kappa` overrides the SVD estimate of kappa_2(A), which double
/// precision cannot resolve beyond ~1/u. `qa` defaults to the Q factor of A.
inline BoundReport evaluate_bounds(const DenseMatrix& a, const SketchOperator& sk, const DenseMatrix& r_hat,
                                   const DenseMatrix& y_hat, std::optional<double> known_kappa = {},
                                   const DenseMatrix* qa = nullptr) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double u = unit_roundoff;
    BoundReport br;
    br.m = a.rows();
    br.n = a.cols();
    br.s = sk.s;
    const double m = static_cast<double>(br.m), n = static_cast<double>(br.n), s = static_cast<double>(br.s);
    const double gn = gamma(n);
    const double rn = std::sqrt(n);

    const auto sva = singular_values(a);
    br.norm_A = sva.front();
    br.kappa_A = known_kappa ? *known_kappa : (sva.back() > 0.0 ? sva.front() / sva.back() : inf);

    const DenseMatrix q_own = qa ? DenseMatrix() : orthonormal_range_basis(a);
    const SketchDistortion d = sketch_distortion(sk, qa ? *qa : q_own);
    br.kappa_SQA = d.kappa_sqa;
    br.norm_S = d.norm_s;
    br.k_S = d.k_s;

    br.C1 = constant_c1(br.m, br.n, br.s, br.gamma_tilde_constant);
    br.eps1_bound = br.C1 * br.k_S * br.kappa_A;
    {
        const double e1 = br.eps1_bound;
        const double kk = br.kappa_A * br.kappa_SQA + e1;
        const double den = (1.0 - e1 - rn * gn * kk) * (1.0 - e1);
        br.eps2_bound = den > 0.0 ? n * gn * br.kappa_SQA * kk * (1.0 + e1) / den : inf;
    }

    br.kappa_Rhat = condition_number(r_hat);
    {
        const double den = 1.0 - rn * gn * br.kappa_Rhat;
        br.phi_Rhat = den > 0.0 ? n * gn * br.kappa_Rhat / den : inf;
    }

    br.yhat_kappa_bound = 4.0 * br.kappa_SQA + 1.0;
    const auto svy = singular_values(y_hat);
    br.norm_Yhat = svy.front();
    br.kappa_Yhat_measured = svy.back() > 0.0 ? svy.front() / svy.back() : inf;

    const double pinv_sqa = d.sigma_min_sqa > 0.0 ? 1.0 / d.sigma_min_sqa : inf;
    const double delta_yhat = u * br.norm_Yhat;
    br.delta_a_bound = br.norm_S * br.norm_A * (6.04 * n * gn * pinv_sqa + 2.01 * delta_yhat);
    br.sigma_conservative = 52.0 * br.norm_A * br.k_S * s * m * rn * u;

    const bool shape_ok = m / n + rn > 200.0;
    br.dims_and_embedding_ok = br.kappa_SQA < 49.0 && n * n * u < 1.0 / 201.0 && shape_ok;
    br.kappa_small_enough = br.kappa_A < 1.0 / (3.0 * br.C1 * br.k_S);
    br.smoothing_assumptions = br.kappa_SQA < 49.0 && shape_ok && s * m * u < 1.0 / 67.0;
    return br;
}

} // namespace sketchls
