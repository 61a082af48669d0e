// Masses, Cartesian and Jacobi phase spaces, the full four-body Hamiltonian
// and its Kepler + perturbation split, and the Legendre expansion of the
// perturbing function.
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "h4bp/common.hpp"

namespace h4bp {

// ---------------------------------------------------------------------------
// MassSet
// ---------------------------------------------------------------------------
struct MassSet {
    std::array<double, 4> m{};    // individual masses, G = 1
    std::array<double, 4> M{};    // partial sums M_j = m_0 + ... + m_j
    std::array<double, 4> mu{};   // reduced masses, mu_j^{-1} = M_{j-1}^{-1} + m_j^{-1}
    bool distinct_01 = true;      // m0 != m1 (hypothesis of the drift theorem)

    MassSet(double m0, double m1, double m2, double m3) {
        if (m0 <= 0.0 || m1 <= 0.0 || m2 <= 0.0 || m3 <= 0.0)
            throw DomainError("MassSet: all masses must be positive");
        m = {m0, m1, m2, m3};
        M[0] = m0;
        for (int j = 1; j < 4; ++j) M[j] = M[j - 1] + m[j];
        mu[0] = m0;
        for (int j = 1; j < 4; ++j) mu[j] = 1.0 / (1.0 / M[j - 1] + 1.0 / m[j]);
        distinct_01 = (m0 != m1);
    }

    // sigma_ij = m_i / M_j
    double sigma(int i, int j) const { return m[i] / M[j]; }

    // sigma_tilde for pair (1,2):  sigma01^{n-1} + (-1)^n sigma11^{n-1}
    // sigma_tilde for pair (2,3): (sigma02+sigma12)^{n-1} + (-1)^n sigma22^{n-1}
    double sigma_tilde(int pair, int n) const {
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        if (pair == 1)
            return std::pow(sigma(0, 1), n - 1) + sign * std::pow(sigma(1, 1), n - 1);
        if (pair == 2)
            return std::pow(sigma(0, 2) + sigma(1, 2), n - 1) + sign * std::pow(sigma(2, 2), n - 1);
        throw DomainError("sigma_tilde: pair must be 1 or 2");
    }
};

// ---------------------------------------------------------------------------
// Phase-space value types
// ---------------------------------------------------------------------------
struct CartesianPhase {
    std::array<Vec3, 4> x{};  // positions
    std::array<Vec3, 4> y{};  // momenta
};

struct JacobiPhase {
    std::array<Vec3, 4> q{};  // q0 = center handle, q1..q3 hierarchical offsets
    std::array<Vec3, 4> p{};  // conjugate momenta; reduced form has p0 = 0

    Vec3 C(int j) const { return cross(q[j], p[j]); }
    Vec3 C_total() const { return C(1) + C(2) + C(3); }
};

// ---------------------------------------------------------------------------
// Jacobi map (linear, symplectic)
// ---------------------------------------------------------------------------
inline JacobiPhase to_jacobi(const CartesianPhase& c, const MassSet& ms) {
    const double s01 = ms.sigma(0, 1), s11 = ms.sigma(1, 1);
    const double s02 = ms.sigma(0, 2), s12 = ms.sigma(1, 2), s22 = ms.sigma(2, 2);
    JacobiPhase j;
    j.q[0] = c.x[0];
    j.q[1] = c.x[1] - c.x[0];
    j.q[2] = c.x[2] - s01 * c.x[0] - s11 * c.x[1];
    j.q[3] = c.x[3] - s02 * c.x[0] - s12 * c.x[1] - s22 * c.x[2];
    j.p[0] = c.y[0] + c.y[1] + c.y[2] + c.y[3];
    j.p[1] = c.y[1] + s11 * c.y[2] + s11 * c.y[3];
    j.p[2] = c.y[2] + s22 * c.y[3];
    j.p[3] = c.y[3];
    return j;
}

inline CartesianPhase from_jacobi(const JacobiPhase& j, const MassSet& ms) {
    const double s01 = ms.sigma(0, 1), s11 = ms.sigma(1, 1);
    const double s02 = ms.sigma(0, 2), s12 = ms.sigma(1, 2), s22 = ms.sigma(2, 2);
    CartesianPhase c;
    c.x[0] = j.q[0];
    c.x[1] = j.q[1] + c.x[0];
    c.x[2] = j.q[2] + s01 * c.x[0] + s11 * c.x[1];
    c.x[3] = j.q[3] + s02 * c.x[0] + s12 * c.x[1] + s22 * c.x[2];
    c.y[3] = j.p[3];
    c.y[2] = j.p[2] - s22 * j.p[3];
    c.y[1] = j.p[1] - s11 * (c.y[2] + c.y[3]);
    c.y[0] = j.p[0] - c.y[1] - c.y[2] - c.y[3];
    return c;
}

// ---------------------------------------------------------------------------
// Hamiltonians
// ---------------------------------------------------------------------------
inline double hamiltonian_cartesian(const CartesianPhase& c, const MassSet& ms,
                                    double collision_floor = 1e-12) {
    double kinetic = 0.0;
    for (int i = 0; i < 4; ++i) kinetic += dot(c.y[i], c.y[i]) / (2.0 * ms.m[i]);
    double potential = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const double r = norm(c.x[j] - c.x[i]);
            if (r < collision_floor) throw CollisionError("hamiltonian_cartesian: bodies too close");
            potential -= ms.m[i] * ms.m[j] / r;
        }
    return kinetic + potential;
}

struct JacobiEnergy {
    double f_kep = 0.0;
    double f_per = 0.0;
};

inline JacobiEnergy hamiltonian_jacobi(const JacobiPhase& j, const MassSet& ms,
                                       double collision_floor = 1e-12) {
    const double s01 = ms.sigma(0, 1), s11 = ms.sigma(1, 1);
    const double s02 = ms.sigma(0, 2), s12 = ms.sigma(1, 2), s22 = ms.sigma(2, 2);
    (void)s02;
    (void)s12;
    // Valid on the reduced space p0 = 0 (the kinetic form diagonalizes there).
    JacobiEnergy e;
    e.f_kep = 0.0;
    for (int k = 1; k <= 3; ++k) {
        const double r = norm(j.q[k]);
        if (r < collision_floor) throw CollisionError("hamiltonian_jacobi: degenerate q");
        e.f_kep += dot(j.p[k], j.p[k]) / (2.0 * ms.mu[k]) - ms.mu[k] * ms.M[k] / r;
    }
    auto inv_dist = [&](const Vec3& v) {
        const double r = norm(v);
        if (r < collision_floor) throw CollisionError("hamiltonian_jacobi: collision");
        return 1.0 / r;
    };
    e.f_per = ms.mu[2] * ms.M[2] * inv_dist(j.q[2]) + ms.mu[3] * ms.M[3] * inv_dist(j.q[3]);
    e.f_per -= ms.m[0] * ms.m[2] * inv_dist(j.q[2] + s11 * j.q[1]);
    e.f_per -= ms.m[0] * ms.m[3] * inv_dist(j.q[3] + s22 * j.q[2] + s11 * j.q[1]);
    e.f_per -= ms.m[1] * ms.m[2] * inv_dist(j.q[2] - s01 * j.q[1]);
    e.f_per -= ms.m[1] * ms.m[3] * inv_dist(j.q[3] + s22 * j.q[2] + (s11 - 1.0) * j.q[1]);
    e.f_per -= ms.m[2] * ms.m[3] * inv_dist(j.q[3] + (s22 - 1.0) * j.q[2]);
    return e;
}

// Exact perturbing term of the inner pair (difference form the Legendre series
// converges to).
inline double f_per12_exact(const JacobiPhase& j, const MassSet& ms) {
    const double s01 = ms.sigma(0, 1), s11 = ms.sigma(1, 1);
    return ms.mu[2] * ms.M[2] / norm(j.q[2]) -
           ms.m[0] * ms.m[2] / norm(j.q[2] + s11 * j.q[1]) -
           ms.m[1] * ms.m[2] / norm(j.q[2] - s01 * j.q[1]);
}

// ---------------------------------------------------------------------------
// Legendre polynomials (three-term recurrence) and the expansion of F_per.
// ---------------------------------------------------------------------------
inline void legendre_all(double x, int n_max, std::vector<double>& P) {
    P.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    P[0] = 1.0;
    if (n_max >= 1) P[1] = x;
    for (int n = 2; n <= n_max; ++n)
        P[static_cast<std::size_t>(n)] =
            ((2.0 * n - 1.0) * x * P[static_cast<std::size_t>(n) - 1] -
             (n - 1.0) * P[static_cast<std::size_t>(n) - 2]) /
            n;
}

inline double legendre_p(int n, double x) {
    std::vector<double> P;
    legendre_all(x, n, P);
    return P[static_cast<std::size_t>(n)];
}

struct LegendreSplit {
    double f12 = 0.0;
    double f23 = 0.0;
};

// Partial sums (degree >= 2 up to n_max) of the two Legendre series:
//   F12 = -(mu1 m2 / |q2|) sum_n sigma_tilde(1,n) P_n(cos z1) (|q1|/|q2|)^n
//   F23 = -(mu2 m3 / |q3|) sum_n sigma_tilde(2,n) P_n(cos z2) (|q2|/|q3|)^n
inline LegendreSplit legendre_perturbation(const JacobiPhase& j, const MassSet& ms, int n_max) {
    const double r1 = norm(j.q[1]), r2 = norm(j.q[2]), r3 = norm(j.q[3]);
    if (!(r1 < r2 && r2 < r3))
        throw DomainError("legendre_perturbation: require |q1| < |q2| < |q3|");
    LegendreSplit out;
    if (n_max < 2) return out;
    const double c1 = dot(j.q[1], j.q[2]) / (r1 * r2);
    const double c2 = dot(j.q[2], j.q[3]) / (r2 * r3);
    std::vector<double> P1, P2;
    legendre_all(c1, n_max, P1);
    legendre_all(c2, n_max, P2);
    double s12 = 0.0, s23 = 0.0;
    double t12 = (r1 / r2) * (r1 / r2), t23 = (r2 / r3) * (r2 / r3);
    for (int n = 2; n <= n_max; ++n) {
        s12 += ms.sigma_tilde(1, n) * P1[static_cast<std::size_t>(n)] * t12;
        s23 += ms.sigma_tilde(2, n) * P2[static_cast<std::size_t>(n)] * t23;
        t12 *= r1 / r2;
        t23 *= r2 / r3;
    }
    out.f12 = -(ms.mu[1] * ms.m[2] / r2) * s12;
    out.f23 = -(ms.mu[2] * ms.m[3] / r3) * s23;
    return out;
}

}  // namespace h4bp
