// Melnikov potentials along the separatrix (numeric and closed-form), the
// kappa function, first orders of the scattering maps on the hyperbolic
// cylinder, the 3x3 transversality matrices with their nondegeneracy
// certificate, and the eight sign-pattern neighbourhoods used to prescribe
// action jumps.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "h4bp/common.hpp"
#include "h4bp/kepler.hpp"
#include "h4bp/numerics.hpp"
#include "h4bp/saddle.hpp"
#include "h4bp/secular.hpp"

namespace h4bp {

// kappa(x) = sqrt(2/3) (L1^2/chi) [1 - x/sinh x]; even, positive for x != 0,
// and kappa(0) = 0.  A short series is used near zero where sinh loses digits.
inline double kappa(double x, const SaddleData& sd) {
    double bracket;
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        bracket = x2 / 6.0 - 7.0 * x2 * x2 / 360.0;
    } else {
        bracket = 1.0 - x / std::sinh(x);
    }
    return std::sqrt(2.0 / 3.0) * (sd.L1 * sd.L1 / sd.chi) * bracket;
}

// ---------------------------------------------------------------------------
// Numeric Melnikov potential
// ---------------------------------------------------------------------------
struct MelnikovResult {
    double value = 0.0;
    double horizon = 0.0;     // truncation time T = 30 / A2
    double tail_bound = 0.0;  // estimated contribution of |t| > T
    bool near_zero = false;   // value below absolute scale; compare absolutely
    std::vector<std::pair<double, double>> samples;  // (t, integrand) diagnostics
};

// Integral over time of a perturbation evaluated along the separatrix minus
// the same perturbation along the asymptotic saddle orbits.  The saddle
// orbits are phase-matched: the separatrix drift angle converges to
// gammat2_0 +- arctan(1/chi) + (2 Gamma~2/L1^2) t as t -> +-infinity, so the
// forward branch subtracts the orbit through the forward asymptotic phase
// and likewise backward; the integrand then decays at the hyperbolic rate.
inline MelnikovResult melnikov_numeric(
    const std::function<double(const SeparatrixPoint&)>& f, const SaddleData& sd,
    double gammat2_0, double tol = 1e-12) {
    const double T = 30.0 / sd.A2;
    const double drift = 2.0 * sd.Gt2 / (sd.L1 * sd.L1);
    const double phase = std::atan(1.0 / sd.chi);
    auto saddle_point = [&](double t, double gamma1_eq, double phase0) {
        SeparatrixPoint p;
        p.gamma1 = gamma1_eq;
        p.Gamma1 = sd.L1;
        p.gammat2 = phase0 + drift * t;
        p.Gt2 = sd.Gt2;
        p.ecc1 = 0.0;  // circular inner orbit on the saddle circle
        return p;
    };
    auto fwd = [&](double t) {
        return f(separatrix(t, gammat2_0, sd)) -
               f(saddle_point(t, sd.gamma1_min, gammat2_0 + phase));
    };
    auto bwd = [&](double t) {
        return f(separatrix(t, gammat2_0, sd)) -
               f(saddle_point(t, sd.gamma1_max, gammat2_0 - phase));
    };
    const QuadResult qp = quad_line(fwd, 0.0, T, tol);
    const QuadResult qm = quad_line(bwd, -T, 0.0, tol);

    MelnikovResult out;
    out.value = qp.value + qm.value;
    out.horizon = T;
    // The integrand decays like e^{-A2 t}; bound the tail by its endpoint
    // magnitude divided by the rate (plus the quadrature error estimates).
    out.tail_bound = (std::abs(fwd(T)) + std::abs(bwd(-T))) / sd.A2 +
                     qp.error_estimate + qm.error_estimate;
    const int n_samples = 33;
    out.samples.reserve(n_samples);
    double scale = 0.0;
    for (int k = 0; k < n_samples; ++k) {
        const double t = -T + 2.0 * T * k / (n_samples - 1);
        const double v = (t >= 0.0) ? fwd(t) : bwd(t);
        out.samples.emplace_back(t, v);
        scale = std::max(scale, std::abs(v));
    }
    if (qp.error_estimate + qm.error_estimate > 1e-9 * std::max(1.0, scale))
        throw NonConvergent("melnikov_numeric: quadrature did not converge");
    out.near_zero = std::abs(out.value) < 1e-10 * std::max(scale, 1e-30) ||
                    out.tail_bound >= 1e-10 * std::abs(out.value);
    return out;
}

// Closed form of the Melnikov integral of the outer first-harmonic strip term
// along the separatrix: all tilde variables other than (gamma1, Gamma1,
// gamma~2) are spectators, so the integral factorizes through kappa.
inline double melnikov_h123_closed(double gammat2_0, double psit1, double gt3, double ellt3,
                                   const SaddleData& sd, const TrigPoly23& tp) {
    const double v3 = true_from_mean(ellt3, tp.e3());
    const double kap = kappa(PI * sd.Gt2 / (sd.A2 * sd.L1 * sd.L1), sd);
    return tp.radial3(v3) * kap *
           (tp.A1(gt3, psit1, v3) * std::cos(gammat2_0) +
            tp.B1(gt3, psit1, v3) * std::sin(gammat2_0));
}

// ---------------------------------------------------------------------------
// Scattering-map first order
// ---------------------------------------------------------------------------
struct ScatteringJump {
    double S1 = 0.0, S2 = 0.0, S3 = 0.0;  // jumps in Psi^1, Gamma^3, L^3
    double S1_kappa = 0.0;  // kappa-proportional part of S1 (Melnikov gradient)
    double S1_shear = 0.0;  // C2-proportional part (averaging/phase-shift cross term)
    double Delta0 = 0.0;    // phase shift of gamma~2 across the separatrix
    double Delta1 = 0.0;    // phase shift of psi~1 (before the 1/L2^2 scaling)
    double C1 = 0.0;        // -+ e1_23 kappa(pi Gamma2 / (A2 L1^2))
    double C2 = 0.0;        // shear constant of the averaging correction
    double c = 0.0;         // sqrt(1 - delta2^2)
    double beta = 0.0;      // 4 delta1^2 - 5
    double v3 = 0.0;        // true anomaly used
};

// First order of the action jumps under the two scattering maps of the
// hyperbolic cylinder.  `sign` is +1 or -1 and selects the homoclinic
// channel; the kappa-proportional parts flip sign with it.  Coefficients are
// the effective (mass-prefactored) expansion constants of the table.
inline ScatteringJump scattering_first_order(double psi1, double g3, double l3, double G2,
                                             int sign, double L1, const TrigPoly23& tp,
                                             const CoefficientTable& ct) {
    if (sign != 1 && sign != -1)
        throw DomainError("scattering_first_order: sign must be +-1");
    const SaddleData sd = saddle_data(L1, G2);
    ScatteringJump sj;
    sj.v3 = true_from_mean(l3, tp.e3());
    sj.c = std::sqrt(1.0 - tp.d2 * tp.d2);
    sj.beta = 4.0 * tp.d1 * tp.d1 - 5.0;
    const double kap = kappa(PI * G2 / (sd.A2 * L1 * L1), sd);
    const double flip = -double(sign);  // the -+ prefactor of the kappa parts
    sj.C1 = flip * ct.e1_23 * kap;
    const double x = G2 * G2 / (L1 * L1);
    sj.C2 = (ct.e0_23 * ct.e2_12 / ct.e1_12) * (L1 / 6.0) * std::sqrt(1.5) * G2 *
            std::sqrt(1.0 - (5.0 / 3.0) * x) / (3.0 * x - 1.0);

    const double rad3 = tp.radial3(sj.v3);
    const double radial = 1.0 + sj.c * std::cos(sj.v3);
    const double s = std::sin(sj.v3 - g3), co = std::cos(sj.v3 - g3);
    const double P = 4.0 * tp.d1 * tp.d3 - 5.0 * tp.d3 / tp.d1;
    const double B1 = P * std::sin(psi1) * s * s + sj.beta * std::cos(psi1) * co * s;
    const double dB1_dpsi = P * std::cos(psi1) * s * s - sj.beta * std::sin(psi1) * co * s;
    const double dB1_dv3 =
        2.0 * P * std::sin(psi1) * s * co + sj.beta * std::cos(psi1) * (co * co - s * s);
    const double dB1_dg3 = -dB1_dv3;

    sj.S1_kappa = flip * ct.e1_23 * rad3 * kap * dB1_dpsi;
    sj.S1_shear = sj.C2 * rad3 *
                  (tp.A0(g3, sj.v3) * std::sin(2.0 * psi1) -
                   tp.B0(g3, sj.v3) * std::cos(2.0 * psi1));
    sj.S1 = sj.S1_kappa + sj.S1_shear;
    sj.S2 = flip * ct.e1_23 * rad3 * kap * dB1_dg3;
    sj.S3 = flip * ct.e1_23 * std::pow(tp.d2, -3) * rad3 * radial * kap *
            (-3.0 * sj.c * std::sin(sj.v3) * B1 + radial * dB1_dv3);

    sj.Delta0 = 2.0 * std::atan(1.0 / sd.chi);
    sj.Delta1 = ct.e2_12 * (L1 / 6.0) * std::sqrt(1.5) * G2 *
                std::sqrt(1.0 - (5.0 / 3.0) * x);
    return sj;
}

// ---------------------------------------------------------------------------
// Transversality matrix
// ---------------------------------------------------------------------------
struct TransversalityResult {
    std::array<std::array<double, 3>, 3> A{};  // partials of (S1,S2,S3) in the angles
    double det = 0.0;
    double scale = 0.0;  // largest entry magnitude, for the singularity test
};

inline TransversalityResult transversality_matrix(double psi1, double g3, double l3,
                                                  double G2, int sign, double L1,
                                                  const TrigPoly23& tp,
                                                  const CoefficientTable& ct,
                                                  double singular_threshold = 1e-10) {
    auto smap = [&](const std::vector<double>& z) {
        const ScatteringJump sj =
            scattering_first_order(z[0], z[1], z[2], G2, sign, L1, tp, ct);
        return std::vector<double>{sj.S1, sj.S2, sj.S3};
    };
    const auto J = fd_jacobian(smap, {psi1, g3, l3}, 1e-5);
    TransversalityResult out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            out.A[i][j] = J[i][j];
            out.scale = std::max(out.scale, std::abs(J[i][j]));
        }
    out.det = out.A[0][0] * (out.A[1][1] * out.A[2][2] - out.A[1][2] * out.A[2][1]) -
              out.A[0][1] * (out.A[1][0] * out.A[2][2] - out.A[1][2] * out.A[2][0]) +
              out.A[0][2] * (out.A[1][0] * out.A[2][1] - out.A[1][1] * out.A[2][0]);
    const double s3 = out.scale * out.scale * out.scale;
    if (std::abs(out.det) < singular_threshold * std::max(s3, 1e-300))
        throw SingularAtZ("transversality_matrix: determinant below threshold");
    return out;
}

// Reduced determinant certificate at the distinguished zero z0 of the jump
// map: after scaling rows and columns by common factors the determinant is
// 4 C1 (delta1/delta3) beta - 240 C2 (1 - delta1^2).
inline double reduced_det_certificate(double G2, int sign, double L1, const TrigPoly23& tp,
                                      const CoefficientTable& ct) {
    const ScatteringJump sj =
        scattering_first_order(PI / 2.0, 0.0, 0.0, G2, sign, L1, tp, ct);
    return 4.0 * sj.C1 * (tp.d1 / tp.d3) * sj.beta -
           240.0 * sj.C2 * (1.0 - tp.d1 * tp.d1);
}

// ---------------------------------------------------------------------------
// Octant neighbourhoods
// ---------------------------------------------------------------------------
struct OctantSet {
    std::array<int, 3> pattern{};   // required signs of (S1, S2, S3)
    std::array<double, 3> center{};  // (psi1, gamma3, ell3)
    double radius = 0.0;
    std::array<double, 3> margin{};  // min |S_j| over the verification grid
    double min_abs_det = 0.0;        // min |det A| over the verification grid
};

// For each of the eight sign patterns of (S1, S2, S3), search the angle torus
// on a grid for the point with the best normalized margin, then certify the
// pattern and the nondegeneracy of the transversality matrix on a small grid
// over a ball about that point.  (The distinguished zero of the jump map is
// unusable as an inverse-function-theorem seed: the second and third rows of
// the matrix are exactly proportional there, since both jumps are gradients
// of one scalar that locally depends on a single combination of the angles.)
inline std::vector<OctantSet> octant_sets(double G2, int sign, double L1,
                                          const TrigPoly23& tp, const CoefficientTable& ct,
                                          int search_grid = 48, int cert_grid = 3) {
    auto jumps = [&](double p, double g, double l) {
        const ScatteringJump sj = scattering_first_order(p, g, l, G2, sign, L1, tp, ct);
        return std::array<double, 3>{sj.S1, sj.S2, sj.S3};
    };
    // Component scales for margin normalization.
    std::array<double, 3> scale{0.0, 0.0, 0.0};
    const int N = search_grid;
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            for (int cc = 0; cc < N; ++cc) {
                const auto S = jumps(TWO_PI * a / N, TWO_PI * b / N, TWO_PI * cc / N);
                for (int j = 0; j < 3; ++j) scale[j] = std::max(scale[j], std::abs(S[j]));
            }
    std::array<double, 8> best{};
    std::array<std::array<double, 3>, 8> center{};
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            for (int cc = 0; cc < N; ++cc) {
                const std::array<double, 3> z{TWO_PI * a / N, TWO_PI * b / N,
                                              TWO_PI * cc / N};
                const auto S = jumps(z[0], z[1], z[2]);
                const int mask =
                    (S[0] > 0.0 ? 1 : 0) | (S[1] > 0.0 ? 2 : 0) | (S[2] > 0.0 ? 4 : 0);
                double margin = 1e300;
                for (int j = 0; j < 3; ++j)
                    margin = std::min(margin, std::abs(S[j]) / scale[j]);
                if (margin > best[mask]) {
                    best[mask] = margin;
                    center[mask] = z;
                }
            }
    std::vector<OctantSet> out;
    for (int mask = 0; mask < 8; ++mask) {
        if (best[mask] == 0.0)
            throw OctantNotFound("octant_sets: sign pattern absent at grid resolution " +
                                 std::to_string(N));
        OctantSet oc;
        oc.pattern = {(mask & 1) ? 1 : -1, (mask & 2) ? 1 : -1, (mask & 4) ? 1 : -1};
        oc.center = center[mask];
        // Certify on a ball about the best point; shrink the ball while the
        // pattern (or the nondegeneracy) fails on it -- the tightest patterns
        // have margins of order a percent of the component scales, well below
        // one grid spacing times the gradient.
        const int g = cert_grid;
        bool certified = false;
        for (double rho = 0.25 * TWO_PI / N; rho > 1e-6; rho *= 0.5) {
            oc.radius = rho;
            oc.margin = {1e300, 1e300, 1e300};
            oc.min_abs_det = 1e300;
            bool ok = true;
            for (int a = 0; a < g && ok; ++a)
                for (int b = 0; b < g && ok; ++b)
                    for (int cc = 0; cc < g && ok; ++cc) {
                        const std::array<double, 3> zz{
                            oc.center[0] + rho * (2.0 * a / (g - 1) - 1.0),
                            oc.center[1] + rho * (2.0 * b / (g - 1) - 1.0),
                            oc.center[2] + rho * (2.0 * cc / (g - 1) - 1.0)};
                        const auto S = jumps(zz[0], zz[1], zz[2]);
                        for (int j = 0; j < 3; ++j) {
                            if (S[j] * oc.pattern[j] <= 0.0) ok = false;
                            oc.margin[j] = std::min(oc.margin[j], std::abs(S[j]));
                        }
                        if (!ok) break;
                        try {
                            const TransversalityResult t2 = transversality_matrix(
                                zz[0], zz[1], zz[2], G2, sign, L1, tp, ct);
                            oc.min_abs_det = std::min(oc.min_abs_det, std::abs(t2.det));
                        } catch (const SingularAtZ&) {
                            ok = false;
                        }
                    }
            if (ok) {
                certified = true;
                break;
            }
        }
        if (!certified)
            throw OctantNotFound("octant_sets: no certified ball for a sign pattern");
        out.push_back(oc);
    }
    return out;
}

// When both homoclinic channels are nondegenerate at z0, pick the one with the
// larger reduced determinant magnitude (ties broken towards +).
inline int choose_channel(double G2, double L1, const TrigPoly23& tp,
                          const CoefficientTable& ct) {
    const double dp = std::abs(reduced_det_certificate(G2, +1, L1, tp, ct));
    const double dm = std::abs(reduced_det_certificate(G2, -1, L1, tp, ct));
    return (dp >= dm) ? +1 : -1;
}

}  // namespace h4bp
