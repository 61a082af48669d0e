// Integrable skeleton of the inner-strip quadrupole energy: the hyperbolic
// equilibria of the (gamma1, Gamma1) system at fixed Gamma~2, the constants
// chi and A2 controlling the heteroclinic connection, the explicit separatrix
// parametrization, and the quadratic normal form in Poincare variables.
#pragma once

#include <cmath>

#include "h4bp/common.hpp"
#include "h4bp/secular.hpp"

namespace h4bp {

// Constants attached to the pair of saddles of the (gamma1, Gamma1) flow at
// fixed Gamma~2.  Requires Gamma~2 < L1 sqrt(3/5) for the saddles to exist.
struct SaddleData {
    double L1 = 0.0;
    double Gt2 = 0.0;
    double gamma1_min = 0.0;  // saddle angle in (0, pi/2)
    double gamma1_max = 0.0;  // mirror saddle, pi - gamma1_min
    double chi = 0.0;         // shape constant of the connection
    double A2 = 0.0;          // hyperbolic rate (positive eigenvalue)
};

// Gamma~2 window of the normally hyperbolic cylinder.  The upper bound uses
// the stricter L1/sqrt(3) (where the twist construction degenerates), not the
// mere existence bound L1 sqrt(3/5).
struct CylinderWindow {
    double zeta1 = 0.0;
    double zeta2 = 0.0;

    CylinderWindow(double z1, double z2, double L1) : zeta1(z1), zeta2(z2) {
        if (!(0.0 < z1 && z1 < z2 && z2 < L1 / std::sqrt(3.0)))
            throw DomainError("CylinderWindow: require 0 < zeta1 < zeta2 < L1/sqrt(3)");
    }
};

struct QuadVectorField {
    double dgamma1 = 0.0;
    double dGamma1 = 0.0;
    double dgammat2 = 0.0;
};

// Hamiltonian vector field of the strip quadrupole energy in the chart
// (gamma1, Gamma1; gamma~2, Gamma~2); Gamma~2 is a constant of motion.
inline QuadVectorField quad_vector_field(double gamma1, double Gamma1, double Gt2,
                                         double L1) {
    if (!(0.0 < Gt2 && Gt2 <= Gamma1 && Gamma1 <= L1))
        throw DomainError("quad_vector_field: require 0 < Gamma~2 <= Gamma1 <= L1");
    const double sg = std::sin(gamma1);
    const double sg2 = sg * sg;
    const double L1sq = L1 * L1;
    const double r2 = Gt2 * Gt2 / (Gamma1 * Gamma1);
    QuadVectorField vf;
    vf.dgamma1 = (2.0 * Gamma1 / L1sq) * (5.0 * (1.0 - r2) * sg2 - 2.0) -
                 10.0 * (1.0 - Gamma1 * Gamma1 / L1sq) * (Gt2 * Gt2 / (Gamma1 * Gamma1 * Gamma1)) * sg2;
    vf.dGamma1 = 5.0 * (1.0 - Gamma1 * Gamma1 / L1sq) * (1.0 - r2) * std::sin(2.0 * gamma1);
    // Full partial in Gamma~2: reduces to the pure drift 2 Gamma~2 / L1^2 on
    // the saddle circle Gamma1 = L1; off it the second term produces the
    // finite phase shift accumulated across the separatrix.
    vf.dgammat2 = 2.0 * Gt2 / L1sq +
                  10.0 * (1.0 - Gamma1 * Gamma1 / L1sq) * (Gt2 / (Gamma1 * Gamma1)) * sg2;
    return vf;
}

inline SaddleData saddle_data(double L1, double Gt2) {
    const double x = Gt2 * Gt2 / (L1 * L1);
    if (!(Gt2 > 0.0 && x < 0.6))
        throw DomainError("saddle_data: require 0 < Gamma~2 < L1 sqrt(3/5)");
    SaddleData sd;
    sd.L1 = L1;
    sd.Gt2 = Gt2;
    const double s2 = 2.0 / (5.0 * (1.0 - x));
    sd.gamma1_min = std::asin(std::sqrt(s2));
    sd.gamma1_max = PI - sd.gamma1_min;
    const double root = std::sqrt(1.0 - (5.0 / 3.0) * x);
    sd.chi = std::sqrt(2.0 / 3.0) * (Gt2 / L1) / root;
    sd.A2 = (6.0 / L1) * std::sqrt(2.0 / 3.0) * root;
    return sd;
}

struct SeparatrixPoint {
    double gamma1 = 0.0;
    double Gamma1 = 0.0;
    double gammat2 = 0.0;
    double Gt2 = 0.0;
    // sqrt(1 - Gamma1^2/L1^2), evaluated in closed form.  Recomputing it from
    // Gamma1 loses all digits once Gamma1 is within rounding of L1 (large
    // |t|), which poisons integrands carrying the inner eccentricity; the
    // closed form stays exact down to the underflow threshold.
    double ecc1 = 0.0;
};

// Heteroclinic orbit from the saddle at gamma1_max (t -> -infinity) to the
// saddle at gamma1_min (t -> +infinity), with the gamma~2 drift and the
// finite phase shift 2 arctan(1/chi) accumulated across the passage.
inline SeparatrixPoint separatrix(double t, double gammat2_0, const SaddleData& sd) {
    const double sh = std::sinh(sd.A2 * t);
    const double ch = std::cosh(sd.A2 * t);
    const double chi2 = sd.chi * sd.chi;
    SeparatrixPoint p;
    const double cg = std::sqrt(3.0 / 5.0) * sh /
                      std::sqrt(chi2 + (1.0 + chi2) * sh * sh);
    p.gamma1 = std::acos(clamp_unit(cg, 1e-12, "separatrix gamma1"));
    p.Gamma1 = sd.Gt2 * std::sqrt(5.0 / 3.0) *
               std::sqrt(1.0 + (3.0 / 5.0) * (sd.L1 * sd.L1 / (sd.Gt2 * sd.Gt2)) * sh * sh) /
               ch;
    p.gammat2 = gammat2_0 + (2.0 * sd.Gt2 / (sd.L1 * sd.L1)) * t +
                std::atan(std::tanh(sd.A2 * t) / sd.chi);
    p.Gt2 = sd.Gt2;
    // 1 - Gamma1^2/L1^2 = (1 - (5/3) Gamma~2^2/L1^2) / cosh^2(A2 t).
    const double x = sd.Gt2 * sd.Gt2 / (sd.L1 * sd.L1);
    p.ecc1 = std::sqrt(1.0 - (5.0 / 3.0) * x) / ch;
    return p;
}

// Strip quadrupole energy through the Poincare substitution
//   Gamma1 = L1 - (xi^2 + eta^2)/2,   gamma1 = atan2(eta, xi),
// exact (not truncated); its quadratic part at the origin is
//   (1/L1) [2 xi^2 - (3 - 5 Gamma~2^2/L1^2) eta^2] + Gamma~2^2/L1^2.
inline double h012_poincare(double xi, double eta, double Gt2, double L1) {
    const double r2 = xi * xi + eta * eta;
    if (!(r2 <= 2.0 * L1))
        throw DomainError("h012_poincare: require xi^2 + eta^2 <= 2 L1");
    const double Gamma1 = L1 - 0.5 * r2;
    const double gamma1 = std::atan2(eta, xi);
    return h012_eval(gamma1, Gamma1, Gt2, L1);
}

}  // namespace h4bp
