// Closed-form secular Hamiltonians of the hierarchical 4-body problem: the
// coefficient constants, the quadrupolar/octupolar closed forms for the inner
// pair, the trigonometric polynomials of the outer pair, the strip-expansion
// terms H_0^12 ... H_2^12 and K_0, K_1, and the assembled secular energy.
#pragma once

#include <cmath>

#include "h4bp/common.hpp"
#include "h4bp/deprit.hpp"
#include "h4bp/frames.hpp"
#include "h4bp/kepler.hpp"

namespace h4bp {

// ---------------------------------------------------------------------------
// CoefficientTable
// ---------------------------------------------------------------------------
struct CoefficientTable {
    // Inner-pair strip expansion constants.
    double a0_12 = 0.0;  // > 0
    double a1_12 = 0.0;  // < 0
    double at2 = 0.0;    // tilde-alpha_2
    double a2_12 = 0.0;  // octupolar constant (negative prefactor baked in)
    // Outer-pair and Kepler constants.
    double a_kep = 0.0;  // mu3^3 M3^2 > 0
    double a0_23 = 0.0;
    double a1_23 = 0.0;  // = 6 sqrt(delta1^2 - delta3^2) / delta1^2 * a0_23
    // Averaging-correction constants.
    double beta0 = 0.0;
    double beta1 = 0.0;  // > 0 for delta1 in (0,1)
    // Convenience combinations.
    double C12 = 0.0;  // L1^4 M2^3 mu2^6 / (8 M1^2 mu1^4)
    double C23 = 0.0;  // (3/8) a0_23 delta2^6
    // Mass prefactors of the two secular pieces (the averaged pieces are
    // multiplied by these when assembling the secular energy).
    double pref12 = 0.0;  // -mu1 m2 / (2 pi)^2
    double pref23 = 0.0;  // -mu2 m3 / (2 pi)
    double sigma_tilde13 = 0.0;  // octupole mass-asymmetry weight
    // Effective constants: the coefficients the secular energy actually
    // carries once the mass prefactors (and, for the octupole, the mass
    // asymmetry) are folded in.  All downstream formulas that take ratios of
    // expansion coefficients use these.
    double e0_12 = 0.0, e1_12 = 0.0, et2 = 0.0, e2_12 = 0.0;
    double e0_23 = 0.0, e1_23 = 0.0;

    static CoefficientTable build(const MassSet& ms, const RegimeParams& r) {
        CoefficientTable t;
        const double mu1 = ms.mu[1], mu2 = ms.mu[2], mu3 = ms.mu[3];
        const double M1 = ms.M[1], M2 = ms.M[2], M3 = ms.M[3];
        const double L1 = r.L1, d1 = r.delta1, d2 = r.delta2, d3 = r.delta3;
        t.C12 = std::pow(L1, 4) * std::pow(M2, 3) * std::pow(mu2, 6) /
                (8.0 * M1 * M1 * std::pow(mu1, 4));
        t.a0_12 = 3.0 * t.C12 / std::pow(d1, 3);
        t.a1_12 = -3.0 * t.C12 / std::pow(d1, 4);
        t.at2 = 6.0 * t.C12 / std::pow(d1, 5);
        t.a2_12 = -(15.0 / 64.0) * std::pow(L1, 6) * std::pow(mu2, 8) * std::pow(M2, 4) /
                  (std::pow(mu1, 6) * std::pow(M1, 3)) * std::sqrt(1.0 - d1 * d1) /
                  std::pow(d1, 5);
        t.a_kep = std::pow(mu3, 3) * M3 * M3;
        // The 1/4 matches the normalization of the outer trigonometric
        // polynomials: in the circular coplanar limit they reduce to 1 while
        // the true anomaly average of the degree-2 Legendre term is 1/4.
        t.a0_23 = std::pow(mu3, 6) * std::pow(M3, 3) /
                  (4.0 * std::pow(mu2, 4) * M2 * M2 * std::pow(d2, 6));
        // The mutual-tilt factor makes the first-harmonic term vanish when the
        // two orbital planes coincide (the node angle degenerates there); the
        // value was pinned by extrapolating the coefficient of the first
        // (psi~1, gamma~2) harmonic of the averaged outer quadrupole against
        // quadrature over a grid of (delta1, delta2, delta3).
        t.a1_23 = 6.0 * std::sqrt(d1 * d1 - d3 * d3) / (d1 * d1) * t.a0_23;
        t.C23 = (3.0 / 8.0) * t.a0_23 * std::pow(d2, 6);
        t.beta0 = 0.5 * (9.0 * d1 * d1 - 9.0 * d3 * d3 + 15.0 * d3 * d3 / (d1 * d1) - 15.0);
        t.beta1 = 0.5 * (5.0 - 3.0 * d1 * d1);
        t.pref12 = -ms.mu[1] * ms.m[2] / (TWO_PI * TWO_PI);
        t.pref23 = -ms.mu[2] * ms.m[3] / TWO_PI;
        t.sigma_tilde13 = ms.sigma_tilde(1, 3);
        t.e0_12 = t.pref12 * t.a0_12;
        t.e1_12 = t.pref12 * t.a1_12;
        t.et2 = t.pref12 * t.at2;
        t.e2_12 = t.pref12 * t.sigma_tilde13 * t.a2_12;
        t.e0_23 = t.pref23 * t.a0_23;
        t.e1_23 = t.pref23 * t.a1_23;
        return t;
    }
};

// ---------------------------------------------------------------------------
// TrigPoly23: trigonometric polynomials of the outer quadrupole, parameterized
// by the strip constants (delta1, delta2, delta3).
// ---------------------------------------------------------------------------
struct TrigPoly23 {
    double d1 = 0.5, d2 = 0.5, d3 = 0.25;

    TrigPoly23() = default;
    TrigPoly23(double delta1, double delta2, double delta3)
        : d1(delta1), d2(delta2), d3(delta3) {}
    explicit TrigPoly23(const RegimeParams& r) : d1(r.delta1), d2(r.delta2), d3(r.delta3) {}

    double e3() const { return std::sqrt(1.0 - d2 * d2); }
    // (1 + e3 cos v3)^3, the inverse cube of the outer orbit's scaled radius.
    double radial3(double v3) const {
        const double f = 1.0 + e3() * std::cos(v3);
        return f * f * f;
    }

    double A0(double gt3, double v3) const {
        const double s = std::sin(v3 - gt3);
        return 15.0 * ((d3 * d3 - d3 * d3 / (d1 * d1) - (1.0 - d1 * d1)) * s * s +
                       (1.0 - d1 * d1));
    }
    double B0(double gt3, double v3) const {
        return 30.0 * (d3 / d1) * (1.0 - d1 * d1) * std::cos(v3 - gt3) * std::sin(v3 - gt3);
    }
    double C0(double gt3, double v3) const {
        const double s = std::sin(v3 - gt3);
        return (15.0 * d3 * d3 / (d1 * d1) - 12.0 * d3 * d3 - 3.0 * d1 * d1) * s * s +
               6.0 * d1 * d1 - 5.0;
    }
    double A1(double gt3, double pt1, double v3) const {
        const double s = std::sin(v3 - gt3), c = std::cos(v3 - gt3);
        return d1 * d3 * std::cos(pt1) * s * s - d1 * d1 * std::sin(pt1) * c * s;
    }
    double B1(double gt3, double pt1, double v3) const {
        const double s = std::sin(v3 - gt3), c = std::cos(v3 - gt3);
        return (4.0 * d1 * d3 - 5.0 * d3 / d1) * std::sin(pt1) * s * s +
               (4.0 * d1 * d1 - 5.0) * std::cos(pt1) * c * s;
    }
    double H3t(double gt3, double pt1, double v3) const {
        const double s = std::sin(v3 - gt3), c = std::cos(v3 - gt3);
        const double cp = std::cos(pt1), sp = std::sin(pt1);
        return radial3(v3) *
               ((30.0 * d3 * (1.0 - 1.0 / (d1 * d1)) * cp * cp + 30.0 * d3 / (d1 * d1) -
                 24.0 * d3) *
                    s * s +
                30.0 * (1.0 / d1) * (1.0 - d1 * d1) * cp * sp * c * s);
    }
};

// ---------------------------------------------------------------------------
// Closed forms for the inner pair (per-angle-averaged, in orbital elements)
// ---------------------------------------------------------------------------
inline double f_quad12_closed(double a1, double a2, double e1, double e2, double i12,
                              double gamma1) {
    if (!(a1 < a2)) throw DomainError("f_quad12_closed: require a1 < a2");
    if (e1 < 0.0 || e1 >= 1.0 || e2 < 0.0 || e2 >= 1.0)
        throw DomainError("f_quad12_closed: eccentricities must be in [0,1)");
    const double si = std::sin(i12), cg = std::cos(gamma1);
    return a1 * a1 / (8.0 * a2 * a2 * a2 * std::pow(1.0 - e2 * e2, 1.5)) *
           ((15.0 * e1 * e1 * cg * cg - 12.0 * e1 * e1 - 3.0) * si * si + 3.0 * e1 * e1 +
            2.0);
}

inline double f_oct12_closed(double a1, double a2, double e1, double e2, double i12,
                             double gamma1, double gamma2) {
    if (!(a1 < a2)) throw DomainError("f_oct12_closed: require a1 < a2");
    const double si2 = std::sin(i12) * std::sin(i12), ci = std::cos(i12);
    const double cg1 = std::cos(gamma1), sg1 = std::sin(gamma1);
    const double G1L1sq = 1.0 - e1 * e1;  // (Gamma1/L1)^2
    const double b1 = G1L1sq * (5.0 * si2 * (6.0 - 7.0 * cg1 * cg1) - 3.0) -
                      35.0 * sg1 * sg1 * si2 + 7.0;
    const double b2 = G1L1sq * (5.0 * si2 * (4.0 - 7.0 * cg1 * cg1) - 3.0) -
                      35.0 * sg1 * sg1 * si2 + 7.0;
    return -(15.0 / 64.0) * std::pow(a1, 3) / std::pow(a2, 4) * e1 * e2 /
           std::pow(1.0 - e2 * e2, 2.5) *
           (cg1 * std::cos(gamma2) * b1 + sg1 * std::sin(gamma2) * ci * b2);
}

// ---------------------------------------------------------------------------
// Strip-expansion terms of the inner pair
// ---------------------------------------------------------------------------
struct HTerms12 {
    double H012 = 0.0;
    double H112 = 0.0;
    double Ht2 = 0.0;
    double H212 = 0.0;
};

inline double h012_eval(double gamma1, double Gamma1, double Gt2, double L1) {
    const double sg = std::sin(gamma1);
    return (1.0 - Gamma1 * Gamma1 / (L1 * L1)) *
               (2.0 - 5.0 * (1.0 - Gt2 * Gt2 / (Gamma1 * Gamma1)) * sg * sg) +
           Gt2 * Gt2 / (L1 * L1);
}

// Octupole strip term with the inner eccentricity passed explicitly, so that
// callers holding a better-conditioned value of sqrt(1 - Gamma1^2/L1^2) (for
// example along the separatrix, where Gamma1 approaches L1 exponentially) can
// supply it instead of the cancellation-prone recomputation.
inline double h212_eval(double gamma1, double Gamma1, double Gt2, double gt2, double L1,
                        double e1) {
    const double L1sq = L1 * L1, G1sq = Gamma1 * Gamma1, Gt2sq = Gt2 * Gt2;
    const double sg2 = std::sin(gamma1) * std::sin(gamma1);
    const double si2 = 1.0 - Gt2sq / G1sq;  // sin^2 of the near-perpendicular tilt
    const double cg1 = std::cos(gamma1);
    const double c1 = G1sq / L1sq * (5.0 * si2 * (6.0 - 7.0 * cg1 * cg1) - 3.0) -
                      35.0 * sg2 * si2 + 7.0;
    const double c2 = G1sq / L1sq * (5.0 * si2 * (4.0 - 7.0 * cg1 * cg1) - 3.0) -
                      35.0 * sg2 * si2 + 7.0;
    return e1 * (cg1 * std::cos(gt2) * c1 +
                 (Gt2 / Gamma1) * std::sin(gamma1) * std::sin(gt2) * c2);
}

inline HTerms12 h_terms_12(const TildeState& ts, double L1) {
    const double g1 = ts.gamma1, G1 = ts.Gamma1, Gt2 = ts.Gt2, Pt1 = ts.Psit1;
    if (Gt2 > G1) throw DomainError("h_terms_12: require Gamma~2 <= Gamma1");
    if (!(Gt2 > 0.0 && G1 <= L1)) throw DomainError("h_terms_12: require 0 < Gamma~2 <= Gamma1 <= L1");
    HTerms12 out;
    const double H0 = h012_eval(g1, G1, Gt2, L1);
    out.H012 = H0;
    out.H112 = (3.0 * H0 - 1.0) * Pt1 - 4.0 * Gt2 * H0 + 3.0 * Gt2 - G1 * G1 * Gt2 / (L1 * L1);
    const double sg2 = std::sin(g1) * std::sin(g1);
    const double L1sq = L1 * L1, G1sq = G1 * G1, Gt2sq = Gt2 * Gt2;
    out.Ht2 = (3.0 * H0 - 1.0) * Pt1 * Pt1 +
              (6.0 - 8.0 * H0 - 2.0 * G1sq / L1sq) * Gt2 * Pt1 +
              (1.0 / 8.0) *
                  (sg2 * (5.0 * G1sq - 5.0 * G1sq * G1sq / L1sq +
                          210.0 * G1sq * Gt2sq / L1sq - 205.0 * Gt2sq * Gt2sq / L1sq +
                          205.0 * Gt2sq * Gt2sq / G1sq) +
                   G1sq * G1sq / L1sq - 66.0 * G1sq * Gt2sq / L1sq +
                   41.0 * Gt2sq * Gt2sq / L1sq + 40.0 * Gt2sq);
    out.H212 = h212_eval(g1, G1, Gt2, ts.gt2, L1,
                         std::sqrt(std::max(0.0, 1.0 - G1sq / L1sq)));
    return out;
}

// ---------------------------------------------------------------------------
// Strip-expansion terms of the outer pair
// ---------------------------------------------------------------------------
struct HTerms23 {
    double H023 = 0.0;
    double H123 = 0.0;
    double H3t_term = 0.0;  // (1/L2) Gamma~3 H~3 correction inside K0
    double K0 = 0.0;        // H023 + H3t_term (the further correction H~4 is
                            // carried only as a numeric residual, never a formula)
    double K1 = 0.0;        // = H123 at leading order
    double v3 = 0.0;        // true anomaly used
};

inline HTerms23 h_terms_23(const TildeState& ts, const RegimeParams& r,
                           const TrigPoly23& tp) {
    if (ts.Gt2 > ts.Gamma1) throw DomainError("h_terms_23: require Gamma~2 <= Gamma1");
    HTerms23 out;
    out.v3 = true_from_mean(ts.ellt3, tp.e3());
    const double rad = tp.radial3(out.v3);
    const double cp = std::cos(ts.psit1), sp = std::sin(ts.psit1);
    out.H023 = rad * (tp.A0(ts.gt3, out.v3) * cp * cp +
                      tp.B0(ts.gt3, out.v3) * cp * sp + tp.C0(ts.gt3, out.v3));
    out.H123 = rad * std::sqrt(std::max(0.0, ts.Gamma1 * ts.Gamma1 - ts.Gt2 * ts.Gt2)) *
               (tp.A1(ts.gt3, ts.psit1, out.v3) * std::cos(ts.gt2) +
                tp.B1(ts.gt3, ts.psit1, out.v3) * std::sin(ts.gt2));
    out.H3t_term = (1.0 / r.L2) * ts.Gt3 * tp.H3t(ts.gt3, ts.psit1, out.v3);
    out.K0 = out.H023 + out.H3t_term;
    out.K1 = out.H123;
    return out;
}

// ---------------------------------------------------------------------------
// Exact orbital elements of a tilde state (used for the closed forms and for
// the exact-parameter evaluation of the outer quadrupole).
// ---------------------------------------------------------------------------
struct TildeElements {
    double a1 = 0.0, a2 = 0.0, a3 = 0.0;
    double e1 = 0.0, e2 = 0.0, e3 = 0.0;
    double i12 = 0.0;      // mutual inclination of the inner pair
    double i2t = 0.0;      // tilt between C1+C2 and the total C
    double gamma1 = 0.0, gamma2 = 0.0;
    double Gamma2 = 0.0, Gamma3 = 0.0, Psi1 = 0.0, L3 = 0.0;
};

inline TildeElements tilde_elements(const TildeState& ts, const RegimeParams& r,
                                    const MassSet& ms) {
    TildeElements el;
    const double L1 = r.L1, L2 = r.L2;
    el.Psi1 = ts.Psit1 + r.delta1 * L2;
    el.Gamma2 = el.Psi1 - ts.Gt2;
    el.L3 = r.L3_star + ts.Lt3;
    el.Gamma3 = r.Psi2() - r.delta3 * L2 - ts.Gt3;
    el.a1 = (L1 / ms.mu[1]) * (L1 / ms.mu[1]) / ms.M[1];
    el.a2 = (L2 / ms.mu[2]) * (L2 / ms.mu[2]) / ms.M[2];
    el.a3 = (el.L3 / ms.mu[3]) * (el.L3 / ms.mu[3]) / ms.M[3];
    auto ecc = [](double G, double L) { return std::sqrt(std::max(0.0, 1.0 - G * G / (L * L))); };
    el.e1 = ecc(ts.Gamma1, L1);
    el.e2 = ecc(el.Gamma2, L2);
    el.e3 = ecc(el.Gamma3, el.L3);
    const double Psi2 = r.Psi2();
    el.i12 = std::acos(clamp_unit((el.Psi1 * el.Psi1 - ts.Gamma1 * ts.Gamma1 -
                                   el.Gamma2 * el.Gamma2) /
                                      (2.0 * ts.Gamma1 * el.Gamma2),
                                  1e-9, "i12"));
    el.i2t = std::acos(clamp_unit(
        (Psi2 * Psi2 + el.Psi1 * el.Psi1 - el.Gamma3 * el.Gamma3) / (2.0 * el.Psi1 * Psi2),
        1e-9, "i2~"));
    el.gamma1 = ts.gamma1;
    el.gamma2 = -ts.gt2;
    return el;
}

// Effective strip constants obtained by substituting the exact eccentricity
// and tilt of a state instead of their leading-order values; sharpens the
// outer-quadrupole model from O(1/L2) to O(1/L2^2) accuracy.
inline TrigPoly23 trig_poly_exact(const TildeElements& el) {
    TrigPoly23 tp;
    tp.d1 = std::sqrt(std::max(0.0, 1.0 - el.e2 * el.e2));
    tp.d3 = tp.d1 * std::cos(el.i2t);
    tp.d2 = std::sqrt(std::max(0.0, 1.0 - el.e3 * el.e3));
    return tp;
}

// ---------------------------------------------------------------------------
// Assembled secular energy.  Truncation order is the highest multipole kept:
// 2 = quadrupoles only, 3 = adds the inner octupole and the K1 correction.
// ---------------------------------------------------------------------------
struct SecPieces {
    double f12 = 0.0;   // inner-pair secular energy (mass prefactor included)
    double f23 = 0.0;   // outer-pair secular energy (mass prefactor included)
    double fkep = 0.0;  // slow Kepler terms of the outer action
    double total() const { return f12 + f23 + fkep; }
};

inline SecPieces f_sec_pieces(const TildeState& ts, const RegimeParams& r, const MassSet& ms,
                              int order = 3, bool exact_params = true) {
    const CoefficientTable ct = CoefficientTable::build(ms, r);
    const TildeElements el = tilde_elements(ts, r, ms);
    // Inner pair, closed forms in exact elements.
    double f12 = f_quad12_closed(el.a1, el.a2, el.e1, el.e2, el.i12, el.gamma1);
    if (order >= 3)
        f12 += ct.sigma_tilde13 *
               f_oct12_closed(el.a1, el.a2, el.e1, el.e2, el.i12, el.gamma1, el.gamma2);
    // Outer pair, two-term strip expansion of the quadrupole.
    const TrigPoly23 tp = exact_params ? trig_poly_exact(el) : TrigPoly23(r);
    const HTerms23 h23 = h_terms_23(ts, r, tp);
    const double pref23_geom =
        exact_params
            ? el.a2 * el.a2 / (4.0 * std::pow(el.a3 * (1.0 - el.e3 * el.e3), 3))
            : std::pow(r.L2, 4) / std::pow(r.L3_star, 6) * ct.a0_23;
    // With exact parameters the tilt/eccentricity substitutions already carry
    // the correction that the H~3 term linearizes, so only H023 is kept there.
    double f23 = pref23_geom * (exact_params ? h23.H023 : h23.K0);
    if (order >= 3) f23 += pref23_geom * (ct.a1_23 / ct.a0_23) / r.L2 * h23.K1;
    // Kepler terms of the slow outer action.
    const double fkep = ct.a_kep * ts.Lt3 / std::pow(r.L3_star, 3) -
                        1.5 * ct.a_kep * ts.Lt3 * ts.Lt3 / std::pow(r.L3_star, 4);
    SecPieces p;
    p.f12 = ct.pref12 * f12;
    p.f23 = ct.pref23 * f23;
    p.fkep = fkep;
    return p;
}

inline double f_sec_assemble(const TildeState& ts, const RegimeParams& r, const MassSet& ms,
                             int order = 3, bool exact_params = true) {
    return f_sec_pieces(ts, r, ms, order, exact_params).total();
}

}  // namespace h4bp
