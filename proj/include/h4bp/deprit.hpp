// Deprit action-angle coordinates for the reduced hierarchical 4-body
// problem: construction from Jacobi states, the geometric inverse, derived
// orbital elements, the tilde (strip-centered) rescaling, Poincare variables
// and the conformally symplectic planetary scaling.
#pragma once

#include <array>
#include <cmath>

#include "h4bp/common.hpp"
#include "h4bp/frames.hpp"
#include "h4bp/kepler.hpp"

namespace h4bp {

// ---------------------------------------------------------------------------
// Value types
// ---------------------------------------------------------------------------
struct DepritState {
    // Per body j = 1..3 (index 0 unused to keep the paper's numbering).
    std::array<double, 4> ell{};    // mean anomalies
    std::array<double, 4> L{};      // L_j = mu_j sqrt(M_j a_j)
    std::array<double, 4> gamma{};  // pericenter arguments (from the node)
    std::array<double, 4> Gamma{};  // |C_j|
    std::array<double, 4> psi{};    // node angles psi_1..psi_3
    double Psi1 = 0.0;              // |C_1 + C_2|
    double Psi2 = 0.0;              // |C|
    double Psi3 = 0.0;              // C . k3
};

struct RegimeParams {
    double L2 = 40.0;
    double L3_star = 1e5;
    double delta1 = 0.5;
    double delta2 = 0.5;
    double delta3 = 0.25;
    double L1 = 1.0;

    double eps() const { return 1.0 / L2; }
    double mu() const { return L2 / L3_star; }
    double Psi2() const { return delta2 * L3_star; }
    double hierarchy_ratio() const { return L2 * L2 * L2 / L3_star; }
};

struct TildeState {
    double gamma1 = 0.0, Gamma1 = 0.0;  // unchanged pair
    double Lt3 = 0.0, ellt3 = 0.0;      // L3 - L3*, ell3
    double Psit1 = 0.0, psit1 = 0.0;    // Psi1 - delta1 L2, psi1 + gamma2
    double Gt2 = 0.0, gt2 = 0.0;        // Psi1 - Gamma2, -gamma2
    double Gt3 = 0.0, gt3 = 0.0;        // Psi2 - Gamma3 - delta3 L2, -gamma3
};

struct PoincareVars {
    double xi = 0.0;
    double eta = 0.0;
};

inline PoincareVars to_poincare(double gamma1, double Gamma1, double L1) {
    const double r = std::sqrt(std::max(0.0, 2.0 * (L1 - Gamma1)));
    return {r * std::cos(gamma1), -r * std::sin(gamma1)};
}

inline void from_poincare(const PoincareVars& pv, double L1, double& gamma1, double& Gamma1) {
    Gamma1 = L1 - 0.5 * (pv.xi * pv.xi + pv.eta * pv.eta);
    gamma1 = wrap_2pi(std::atan2(-pv.eta, pv.xi));
}

// ---------------------------------------------------------------------------
// Derived elements
// ---------------------------------------------------------------------------
struct DerivedElements {
    double e1 = 0.0, e2 = 0.0, e3 = 0.0;
    double i12 = 0.0, i23 = 0.0;
};

inline DerivedElements derived_elements(const DepritState& d) {
    DerivedElements out;
    auto ecc = [&](int j) {
        const double r = d.Gamma[static_cast<std::size_t>(j)] / d.L[static_cast<std::size_t>(j)];
        return std::sqrt(std::max(0.0, 1.0 - r * r));
    };
    out.e1 = ecc(1);
    out.e2 = ecc(2);
    out.e3 = ecc(3);
    const double c12 = clamp_unit((d.Psi1 * d.Psi1 - d.Gamma[1] * d.Gamma[1] -
                                   d.Gamma[2] * d.Gamma[2]) /
                                      (2.0 * d.Gamma[1] * d.Gamma[2]),
                                  1e-9, "i12");
    const double c23 = clamp_unit((d.Psi2 * d.Psi2 - d.Gamma[3] * d.Gamma[3] -
                                   d.Psi1 * d.Psi1) /
                                      (2.0 * d.Gamma[3] * d.Psi1),
                                  1e-9, "i23");
    out.i12 = std::acos(c12);
    out.i23 = std::acos(c23);
    return out;
}

// ---------------------------------------------------------------------------
// Jacobi -> Deprit
// ---------------------------------------------------------------------------
namespace detail {
constexpr double NODE_FLOOR = 1e-10;
constexpr double ECC_GUARD = 1e-9;
}  // namespace detail

inline DepritState jacobi_to_deprit(const JacobiPhase& jp, const MassSet& ms) {
    DepritState d;
    const Vec3 k1{1.0, 0.0, 0.0}, k3{0.0, 0.0, 1.0};
    std::array<Vec3, 4> C{}, peri{};
    for (int j = 1; j <= 3; ++j) {
        const Vec3 q = jp.q[static_cast<std::size_t>(j)], p = jp.p[static_cast<std::size_t>(j)];
        const double mu = ms.mu[static_cast<std::size_t>(j)], M = ms.M[static_cast<std::size_t>(j)];
        const double r = norm(q);
        const double E = dot(p, p) / (2.0 * mu) - mu * M / r;
        if (E >= 0.0) throw DepritSingular("jacobi_to_deprit: non-elliptic two-body term");
        const double a = -mu * M / (2.0 * E);
        const double L = mu * std::sqrt(M * a);
        C[static_cast<std::size_t>(j)] = cross(q, p);
        const double G = norm(C[static_cast<std::size_t>(j)]);
        const double e = std::sqrt(std::max(0.0, 1.0 - (G / L) * (G / L)));
        if (e < detail::ECC_GUARD || e > 1.0 - detail::ECC_GUARD)
            throw DepritSingular("jacobi_to_deprit: eccentricity in guard band");
        // Laplace vector points at pericenter.
        const Vec3 evec = cross(p, C[static_cast<std::size_t>(j)]) / (mu * mu * M) - q / r;
        peri[static_cast<std::size_t>(j)] = unit(evec);
        // Eccentric anomaly from r and the radial momentum.
        const double ecosu = 1.0 - r / a;
        const double esinu = dot(q, p) / L;
        const double u = std::atan2(esinu, ecosu);
        d.L[static_cast<std::size_t>(j)] = L;
        d.Gamma[static_cast<std::size_t>(j)] = G;
        d.ell[static_cast<std::size_t>(j)] = wrap_2pi(u - esinu);
    }
    const Vec3 S1 = C[1] + C[2];
    const Vec3 Ctot = S1 + C[3];
    const Vec3 nu12 = cross(C[1], C[2]);
    const Vec3 nu3 = cross(S1, C[3]);
    const Vec3 nu4 = cross(k3, Ctot);
    if (norm(nu12) < detail::NODE_FLOOR || norm(nu3) < detail::NODE_FLOOR ||
        norm(nu4) < detail::NODE_FLOOR)
        throw DepritSingular("jacobi_to_deprit: node below guard band");
    d.Psi1 = norm(S1);
    d.Psi2 = norm(Ctot);
    d.Psi3 = dot(Ctot, k3);
    d.gamma[1] = oriented_angle(C[1], nu12, peri[1]);
    d.gamma[2] = oriented_angle(C[2], nu12, peri[2]);
    d.gamma[3] = oriented_angle(C[3], nu3, peri[3]);
    d.psi[1] = oriented_angle(S1, nu3, nu12);
    d.psi[2] = oriented_angle(Ctot, nu4, nu3);
    d.psi[3] = oriented_angle(k3, k1, nu4);
    return d;
}

// ---------------------------------------------------------------------------
// Deprit -> Jacobi (geometric inverse on the domain D)
// ---------------------------------------------------------------------------
inline JacobiPhase deprit_to_jacobi(const DepritState& d, const MassSet& ms) {
    const Vec3 k1{1.0, 0.0, 0.0}, k3{0.0, 0.0, 1.0};
    // Total angular momentum direction from (Psi2, Psi3, psi3).
    const double ci = clamp_unit(d.Psi3 / d.Psi2, 1e-12, "i");
    const Vec3 nu4 = rot3(d.psi[3], k1);
    const Vec3 Chat = rot_axis(nu4, std::acos(ci), k3);
    // Node nu3 at azimuth psi2 from nu4 around C.
    const Vec3 nu3hat = rot_axis(Chat, d.psi[2], nu4);
    // Split C into S1 = C1+C2 and C3 using the triangle with sides
    // (Psi2, Psi1, Gamma3); the rotation sense is fixed by nu3 = S1 x C3.
    const double ci2t = clamp_unit(
        (d.Psi2 * d.Psi2 + d.Psi1 * d.Psi1 - d.Gamma[3] * d.Gamma[3]) / (2.0 * d.Psi1 * d.Psi2),
        1e-12, "i2~");
    const Vec3 S1 = d.Psi1 * rot_axis(nu3hat, -std::acos(ci2t), Chat);
    const Vec3 C3 = d.Psi2 * Chat - S1;
    // Node nu12 at azimuth psi1 from nu3 around S1, then split S1 into C1, C2.
    const Vec3 S1hat = unit(S1);
    const Vec3 nu12hat = rot_axis(S1hat, d.psi[1], nu3hat);
    const double ci1 = clamp_unit(
        (d.Psi1 * d.Psi1 + d.Gamma[1] * d.Gamma[1] - d.Gamma[2] * d.Gamma[2]) /
            (2.0 * d.Psi1 * d.Gamma[1]),
        1e-12, "i1");
    const Vec3 C1 = d.Gamma[1] * rot_axis(nu12hat, -std::acos(ci1), S1hat);
    const Vec3 C2 = S1 - C1;
    const std::array<Vec3, 4> C{Vec3{}, C1, C2, C3};
    const std::array<Vec3, 4> node{Vec3{}, nu12hat, nu12hat, unit(nu3hat)};

    JacobiPhase jp;
    for (int j = 1; j <= 3; ++j) {
        const std::size_t sj = static_cast<std::size_t>(j);
        const double mu = ms.mu[sj], M = ms.M[sj];
        const double L = d.L[sj], G = d.Gamma[sj];
        const double a = (L / mu) * (L / mu) / M;
        const double e = std::sqrt(std::max(0.0, 1.0 - (G / L) * (G / L)));
        const Vec3 Chat_j = unit(C[sj]);
        const Vec3 Pihat = rot_axis(Chat_j, d.gamma[sj], node[sj]);
        const Vec3 Qhat = cross(Chat_j, Pihat);
        const double u = solve_kepler(d.ell[sj], e);
        const double cu = std::cos(u), su = std::sin(u);
        const double r = a * (1.0 - e * cu);
        const double se = std::sqrt(1.0 - e * e);
        jp.q[sj] = a * ((cu - e) * Pihat + se * su * Qhat);
        // mu * n * a^2 = L with n = sqrt(M/a^3).
        jp.p[sj] = (L / r) * (-su * Pihat + se * cu * Qhat);
    }
    return jp;
}

// ---------------------------------------------------------------------------
// Tilde (strip) change of variables
// ---------------------------------------------------------------------------
inline TildeState to_tilde(const DepritState& d, const RegimeParams& r) {
    if (std::abs(d.Psi2 - r.Psi2()) > 1e-10 * std::max(1.0, r.Psi2()))
        throw DomainError("to_tilde: Psi2 != delta2 * L3_star");
    TildeState t;
    t.gamma1 = d.gamma[1];
    t.Gamma1 = d.Gamma[1];
    t.Lt3 = d.L[3] - r.L3_star;
    t.ellt3 = d.ell[3];
    t.Psit1 = d.Psi1 - r.delta1 * r.L2;
    t.psit1 = d.psi[1] + d.gamma[2];
    t.Gt2 = d.Psi1 - d.Gamma[2];
    t.gt2 = -d.gamma[2];
    t.Gt3 = d.Psi2 - d.Gamma[3] - r.delta3 * r.L2;
    t.gt3 = -d.gamma[3];
    if (t.Gt2 <= 0.0)
        throw BranchError("to_tilde: Gamma~2 <= 0 (other branch unsupported)");
    return t;
}

// Inverse of to_tilde.  Fields of `d` not covered by the tilde variables
// (ell_1, L_1, ell_2, L_2, psi_2, psi_3) are taken from `base`.
inline DepritState from_tilde(const TildeState& t, const RegimeParams& r,
                              const DepritState& base) {
    DepritState d = base;
    d.gamma[1] = t.gamma1;
    d.Gamma[1] = t.Gamma1;
    d.L[3] = r.L3_star + t.Lt3;
    d.ell[3] = t.ellt3;
    d.Psi1 = t.Psit1 + r.delta1 * r.L2;
    d.Gamma[2] = d.Psi1 - t.Gt2;
    d.gamma[2] = -t.gt2;
    d.psi[1] = t.psit1 + t.gt2;  // psi1 = psit1 - gamma2 = psit1 + gt2
    d.Psi2 = r.Psi2();
    d.Gamma[3] = d.Psi2 - r.delta3 * r.L2 - t.Gt3;
    d.gamma[3] = -t.gt3;
    return d;
}

// ---------------------------------------------------------------------------
// Conformally symplectic planetary scaling: actions divided by rho.
// ---------------------------------------------------------------------------
inline DepritState planetary_scale(const DepritState& d, double rho) {
    if (rho <= 0.0) throw DomainError("planetary_scale: rho must be positive");
    DepritState s = d;
    for (int j = 1; j <= 3; ++j) {
        s.L[static_cast<std::size_t>(j)] /= rho;
        s.Gamma[static_cast<std::size_t>(j)] /= rho;
    }
    s.Psi1 /= rho;
    s.Psi2 /= rho;
    s.Psi3 /= rho;
    return s;
}

}  // namespace h4bp
