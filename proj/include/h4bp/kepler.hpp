// Two-body geometry: Kepler equation, anomaly conversions, ellipse factors.
#pragma once

#include <cmath>

#include "h4bp/common.hpp"

namespace h4bp {

struct EllipticElements {
    double a = 1.0;  // semimajor axis
    double e = 0.0;  // eccentricity in [0,1)
    double ell = 0.0;  // mean anomaly
    double u = 0.0;    // eccentric anomaly
    double v = 0.0;    // true anomaly
};

// Solve u - e*sin(u) = ell for the eccentric anomaly.  Newton seeded at
// u0 = ell + 0.85*e*sign(sin ell), safeguarded by bisection on [ell-e, ell+e].
inline double solve_kepler(double ell, double e, double tol = 1e-14, int max_iter = 60) {
    if (e < 0.0 || e >= 1.0) throw DomainError("solve_kepler: eccentricity outside [0,1)");
    const double ell0 = ell;
    ell = wrap_2pi(ell);
    if (e == 0.0) return ell + (ell0 - wrap_2pi(ell0) == 0.0 ? 0.0 : ell0 - ell);
    const double s = std::sin(ell);
    double u = ell + 0.85 * e * (s >= 0.0 ? 1.0 : -1.0);
    double lo = ell - e, hi = ell + e;
    for (int it = 0; it < max_iter; ++it) {
        const double f = u - e * std::sin(u) - ell;
        if (std::abs(f) < tol) return wrap_2pi(u) + (ell0 - wrap_2pi(ell0));
        if (f > 0.0) hi = u; else lo = u;
        const double fp = 1.0 - e * std::cos(u);
        double un = u - f / fp;
        if (!(un > lo && un < hi)) un = 0.5 * (lo + hi);
        u = un;
    }
    throw NoConvergence("solve_kepler: Newton/bisection failed to converge");
}

// True anomaly from eccentric anomaly via
//   rho*cos v = cos u - e,   rho*sin v = sqrt(1-e^2) sin u,  rho = 1 - e cos u.
inline double true_from_eccentric(double u, double e) {
    if (e < 0.0 || e >= 1.0) throw DomainError("true_from_eccentric: bad eccentricity");
    const double uw = wrap_2pi(u);
    double v = std::atan2(std::sqrt(1.0 - e * e) * std::sin(uw), std::cos(uw) - e);
    if (v < 0.0) v += TWO_PI;
    return v + (u - uw);
}

inline double eccentric_from_true(double v, double e) {
    if (e < 0.0 || e >= 1.0) throw DomainError("eccentric_from_true: bad eccentricity");
    const double vw = wrap_2pi(v);
    double u = std::atan2(std::sqrt(1.0 - e * e) * std::sin(vw), std::cos(vw) + e);
    if (u < 0.0) u += TWO_PI;
    return u + (v - vw);
}

inline double true_from_mean(double ell, double e) {
    return true_from_eccentric(solve_kepler(ell, e), e);
}

// dv/dell = (1-e^2)^{-3/2} (1 + e cos v)^2  (Kepler's second law).
inline double dv_dell(double v, double e) {
    if (e < 0.0 || e >= 1.0) throw DomainError("dv_dell: bad eccentricity");
    const double c = 1.0 + e * std::cos(v);
    return c * c / std::pow(1.0 - e * e, 1.5);
}

inline EllipticElements elements_from_mean(double a, double e, double ell) {
    EllipticElements el;
    el.a = a;
    el.e = e;
    el.ell = ell;
    el.u = solve_kepler(ell, e);
    el.v = true_from_eccentric(el.u, e);
    return el;
}

}  // namespace h4bp
