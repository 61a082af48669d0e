// Verification suites shared by the acceptance runner and the `verify`
// subcommand.  Each suite compares closed-form quantities of the library
// against independent oracles (tensor quadrature, finite differences, direct
// integration) and reports the worst observed defect against its bound.
//
// Conventions: `measured` is the worst defect observed by the check and
// `bound` the value it is compared against.  For most checks pass means
// measured < bound; checks that assert a quantity is bounded away from zero
// set `larger_is_better` and pass when measured > bound.  A non-empty `note`
// documents a known structural failure that the suite reports honestly
// instead of weakening the check.
#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "h4bp/deprit.hpp"
#include "h4bp/frames.hpp"
#include "h4bp/inner.hpp"
#include "h4bp/kepler.hpp"
#include "h4bp/melnikov.hpp"
#include "h4bp/numerics.hpp"
#include "h4bp/saddle.hpp"
#include "h4bp/secular.hpp"
#include "oracles.hpp"

namespace h4bp::checks {

struct Check {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool larger_is_better = false;
    bool pass = false;
    std::string note;
};

inline Check below(std::string name, double measured, double bound) {
    Check c;
    c.name = std::move(name);
    c.measured = measured;
    c.bound = bound;
    c.pass = measured < bound;
    return c;
}

inline Check above(std::string name, double measured, double bound) {
    Check c;
    c.name = std::move(name);
    c.measured = measured;
    c.bound = bound;
    c.larger_is_better = true;
    c.pass = measured > bound;
    return c;
}

struct Suite {
    int id = 0;
    std::string name;
    std::vector<Check> checks;
    double seconds = 0.0;

    bool pass() const {
        for (const Check& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

namespace detail {

inline MassSet desk_masses() { return MassSet(1.0, 8e-4, 5e-4, 5e-4); }

inline std::vector<double> flatten(const CartesianPhase& c) {
    std::vector<double> v;
    for (int i = 0; i < 4; ++i) {
        v.push_back(c.x[i].x);
        v.push_back(c.x[i].y);
        v.push_back(c.x[i].z);
    }
    for (int i = 0; i < 4; ++i) {
        v.push_back(c.y[i].x);
        v.push_back(c.y[i].y);
        v.push_back(c.y[i].z);
    }
    return v;
}

inline std::vector<double> flatten(const JacobiPhase& j) {
    std::vector<double> v;
    for (int i = 0; i < 4; ++i) {
        v.push_back(j.q[i].x);
        v.push_back(j.q[i].y);
        v.push_back(j.q[i].z);
    }
    for (int i = 0; i < 4; ++i) {
        v.push_back(j.p[i].x);
        v.push_back(j.p[i].y);
        v.push_back(j.p[i].z);
    }
    return v;
}

inline CartesianPhase unflatten(const std::vector<double>& v) {
    CartesianPhase c;
    for (int i = 0; i < 4; ++i) c.x[i] = {v[3 * i], v[3 * i + 1], v[3 * i + 2]};
    for (int i = 0; i < 4; ++i)
        c.y[i] = {v[12 + 3 * i], v[12 + 3 * i + 1], v[12 + 3 * i + 2]};
    return c;
}

// ||J^T Omega J - Omega||_inf of the hierarchical-coordinate map's
// finite-difference Jacobian at a random phase point.
inline double symplectic_defect(const MassSet& ms, const CartesianPhase& base) {
    auto map = [&](const std::vector<double>& v) {
        return flatten(to_jacobi(unflatten(v), ms));
    };
    const auto J = fd_jacobian(map, flatten(base), 1e-4);
    const int n = 24, d = 12;
    auto omega = [&](int r, int c) {
        if (r < d && c == r + d) return 1.0;
        if (r >= d && c == r - d) return -1.0;
        return 0.0;
    };
    double worst = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double s = 0.0;
            for (int r = 0; r < d; ++r)
                s += J[r][a] * J[r + d][b] - J[r + d][a] * J[r][b];
            worst = std::max(worst, std::abs(s - omega(a, b)));
        }
    return worst;
}

// First-harmonic outer coupling restricted to the separatrix variables; its
// improper time integral factors through the kappa function.
inline double h123_along(const SeparatrixPoint& p, const TrigPoly23& tp, double psit1,
                         double gt3, double ellt3) {
    const double v3 = true_from_mean(ellt3, tp.e3());
    const double amp = std::sqrt(std::max(0.0, p.Gamma1 * p.Gamma1 - p.Gt2 * p.Gt2));
    return tp.radial3(v3) * amp *
           (tp.A1(gt3, psit1, v3) * std::cos(p.gammat2) +
            tp.B1(gt3, psit1, v3) * std::sin(p.gammat2));
}

// Finite difference of the sector of the averaged energy carrying a
// derivative-table entry (j < 0 selects the gradient entry i).  The three
// sectors live many orders of magnitude apart, so differencing the total
// would drown the small entries in the large sector's quadrature noise.
inline double averaged_entry_fd(int i, int j, double G2, const RegimeParams& r,
                                const MassSet& ms) {
    const int sec = (i == 2 || j == 2) ? 2 : (i == 3 || j == 3) ? 3 : 1;
    auto f = [&](const std::array<double, 4>& P) {
        return f_sec_averaged(P, r, ms, 2, 1e-13, sec);
    };
    const std::array<double, 4> x0 = {G2, 0.0, 0.0, 0.0};
    if (j < 0) {
        const double h = (sec == 2) ? 1e-2 : 1e-4;
        auto xp = x0, xm = x0;
        xp[static_cast<std::size_t>(i)] += h;
        xm[static_cast<std::size_t>(i)] -= h;
        return (f(xp) - f(xm)) / (2.0 * h);
    }
    const double hi = (i == 2) ? 3e-2 : 3e-3;
    const double hj = (j == 2) ? 3e-2 : 3e-3;
    if (i == j) {
        auto xp = x0, xm = x0;
        xp[static_cast<std::size_t>(i)] += hi;
        xm[static_cast<std::size_t>(i)] -= hi;
        return (f(xp) - 2.0 * f(x0) + f(xm)) / (hi * hi);
    }
    auto a = x0, b = x0, c = x0, d = x0;
    a[static_cast<std::size_t>(i)] += hi;
    a[static_cast<std::size_t>(j)] += hj;
    b[static_cast<std::size_t>(i)] += hi;
    b[static_cast<std::size_t>(j)] -= hj;
    c[static_cast<std::size_t>(i)] -= hi;
    c[static_cast<std::size_t>(j)] += hj;
    d[static_cast<std::size_t>(i)] -= hi;
    d[static_cast<std::size_t>(j)] -= hj;
    return (f(a) - f(b) - f(c) + f(d)) / (4.0 * hi * hj);
}

// Ratio of the finite-difference entry to the closed-table entry,
// extrapolated over strip-scale doublings with the chart shape held fixed
// (the raw ratio at the base scale carries O(1/L2) corrections of
// ten-percent size; three-point extrapolation in 1/L2 removes them).
inline double richardson_ratio(int i, int j, double G2, const RegimeParams& base,
                               const MassSet& ms) {
    double rho[3];
    for (int s = 0; s < 3; ++s) {
        RegimeParams r = base;
        const double f = std::pow(2.0, s);
        r.L2 = base.L2 * f;
        r.L3_star = base.L3_star * f * f * f;
        const CoefficientTable ct = CoefficientTable::build(ms, r);
        const Fhat0Table t = fhat0_derivatives(G2, r, ct);
        const double table = (j < 0) ? t.grad[static_cast<std::size_t>(i)]
                                     : t.hess[static_cast<std::size_t>(i)]
                                           [static_cast<std::size_t>(j)];
        rho[s] = averaged_entry_fd(i, j, G2, r, ms) / table;
    }
    return (8.0 * rho[2] - 6.0 * rho[1] + rho[0]) / 3.0;
}

template <typename F>
Suite timed(int id, std::string name, F body) {
    Suite s;
    s.id = id;
    s.name = std::move(name);
    const auto t0 = std::chrono::steady_clock::now();
    body(s);
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
}

}  // namespace detail

// 1. Symplecticity of the hierarchical coordinate map on random phase points
//    and mass sets.
inline Suite suite_symplectic(int cases = 100) {
    return detail::timed(1, "hierarchical-map symplecticity", [&](Suite& s) {
        CounterRng rng(17);
        double worst = 0.0;
        for (int k = 0; k < cases; ++k) {
            const MassSet ms(rng.uniform(0.5, 2.0), rng.uniform(1e-4, 1e-2),
                             rng.uniform(1e-4, 1e-2), rng.uniform(1e-4, 1e-2));
            CartesianPhase c;
            for (int i = 0; i < 4; ++i) {
                c.x[i] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                          rng.uniform(-1.0, 1.0)};
                c.y[i] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                          rng.uniform(-1.0, 1.0)};
            }
            worst = std::max(worst, detail::symplectic_defect(ms, c));
        }
        s.checks.push_back(below("||J^T O J - O||_inf over random cases", worst, 1e-11));
    });
}

// 2. Closed-form doubly averaged inner-pair energies against tensor
//    quadrature on random ellipse pairs.
inline Suite suite_closed_forms(int cases = 50) {
    return detail::timed(2, "averaged closed forms vs quadrature", [&](Suite& s) {
        CounterRng rng(7);
        double worst_q = 0.0, worst_o = 0.0;
        for (int k = 0; k < cases; ++k) {
            oracles::EllipsePair ep;
            ep.a1 = 1.0;
            ep.a2 = rng.uniform(15.0, 40.0);
            ep.e1 = rng.uniform(0.05, 0.8);
            ep.e2 = rng.uniform(0.05, 0.7);
            ep.g1 = rng.uniform(0.0, TWO_PI);
            ep.g2 = rng.uniform(0.0, TWO_PI);
            ep.i12 = rng.uniform(0.1, PI - 0.1);
            const double oq = oracles::multipole_average_12(ep, 2);
            const double cq = f_quad12_closed(ep.a1, ep.a2, ep.e1, ep.e2, ep.i12, ep.g1);
            worst_q = std::max(worst_q, std::abs(cq - oq) / std::abs(oq));
            const double oo = oracles::multipole_average_12(ep, 3);
            const double co =
                f_oct12_closed(ep.a1, ep.a2, ep.e1, ep.e2, ep.i12, ep.g1, ep.g2);
            worst_o = std::max(worst_o,
                               std::abs(co - oo) / std::max(std::abs(oo), 1e-6));
        }
        s.checks.push_back(below("degree-2 closed form rel err", worst_q, 1e-8));
        s.checks.push_back(below("degree-3 closed form rel err", worst_o, 1e-7));
    });
}

// 3. Expansion orders of the strip models: ninth-order residual of the
//    three-term inner expansion, and the two-term outer expansion against
//    the full fast-angle average.
inline Suite suite_expansion_orders() {
    return detail::timed(3, "strip expansion orders", [&](Suite& s) {
        const MassSet ms = detail::desk_masses();
        TildeState A;
        A.gamma1 = 1.1;
        A.Gamma1 = 0.9;
        A.Lt3 = 0.2;
        A.ellt3 = 2.3;
        A.Psit1 = 0.3;
        A.psit1 = 0.8;
        A.Gt2 = 0.45;
        A.gt2 = 2.6;
        A.Gt3 = 0.4;
        A.gt3 = 1.7;
        TildeState B = A;
        B.gamma1 = 0.7;
        B.Gamma1 = 0.75;
        B.Gt2 = 0.6;
        B.Psit1 = -0.2;
        auto model = [&](const TildeState& ts, const RegimeParams& r) {
            const CoefficientTable ct = CoefficientTable::build(ms, r);
            const HTerms12 h = h_terms_12(ts, r.L1);
            const double eps = 1.0 / r.L2;
            return std::pow(eps, 6) * ct.a0_12 * h.H012 +
                   std::pow(eps, 7) * ct.a1_12 * h.H112 +
                   std::pow(eps, 8) * ct.at2 * h.Ht2;
        };
        auto closed = [&](const TildeState& ts, const RegimeParams& r) {
            const TildeElements el = tilde_elements(ts, r, ms);
            return f_quad12_closed(el.a1, el.a2, el.e1, el.e2, el.i12, el.gamma1);
        };
        auto residual = [&](double L2) {
            RegimeParams r;
            r.L2 = L2;
            return (closed(A, r) - closed(B, r)) - (model(A, r) - model(B, r));
        };
        const double exponent = std::log2(std::abs(residual(50.0) / residual(100.0)));
        s.checks.push_back(below("|inner residual exponent - 9|",
                                 std::abs(exponent - 9.0), 9.0 * 0.2));

        // Outer two-term expansion: heavy, nearly coplanar outer pair with
        // small strip actions keeps the dropped orders below the bound.
        RegimeParams r;
        r.L2 = 30.0;
        r.delta2 = 0.9;
        r.delta3 = 0.48;
        TildeState ts = A;
        ts.Gamma1 = 0.1;
        ts.Gt2 = 0.09;
        ts.Psit1 = -0.01;
        ts.Gt3 = 0.01;
        ts.Lt3 = 0.0;
        DepritState base;
        base.L[1] = r.L1;
        base.L[2] = r.L2;
        base.ell[1] = 0.4;
        base.ell[2] = 0.0;
        base.psi[2] = 0.9;
        base.psi[3] = 0.3;
        const DepritState d = from_tilde(ts, r, base);
        const double oracle = oracles::quad23_average(d, ms);
        const TildeElements el = tilde_elements(ts, r, ms);
        const TrigPoly23 tp = trig_poly_exact(el);
        const HTerms23 h = h_terms_23(ts, r, tp);
        const double pref =
            el.a2 * el.a2 / (4.0 * std::pow(el.a3 * (1.0 - el.e3 * el.e3), 3));
        const CoefficientTable ct = CoefficientTable::build(ms, r);
        const double two_term = pref * (h.H023 + (ct.a1_23 / ct.a0_23) / r.L2 * h.K1);
        s.checks.push_back(below("outer two-term expansion rel err",
                                 std::abs(two_term - oracle) / std::abs(oracle), 1e-4));
    });
}

// 4. Separatrix certificate: defining ODE, energy level, phase shift and
//    asymptotic approach of the closed-form parametrization.
inline Suite suite_separatrix() {
    return detail::timed(4, "separatrix certificate", [&](Suite& s) {
        const double L1 = 1.0, Gt2 = 0.3, gt2_0 = 0.7;
        const SaddleData sd = saddle_data(L1, Gt2);
        double worst_ode = 0.0, worst_energy = 0.0;
        const double e0 = Gt2 * Gt2 / (L1 * L1);
        for (int k = 0; k < 100; ++k) {
            const double t = -2.0 + 4.0 * k / 99.0;
            const auto p = separatrix(t, gt2_0, sd);
            const auto vf = quad_vector_field(p.gamma1, p.Gamma1, Gt2, L1);
            const double dg1 =
                fd_derivative([&](double u) { return separatrix(u, gt2_0, sd).gamma1; }, t,
                              1e-6)
                    .value;
            const double dG1 =
                fd_derivative([&](double u) { return separatrix(u, gt2_0, sd).Gamma1; }, t,
                              1e-6)
                    .value;
            worst_ode = std::max({worst_ode, std::abs(dg1 - vf.dgamma1),
                                  std::abs(dG1 - vf.dGamma1)});
            worst_energy = std::max(
                worst_energy, std::abs(h012_eval(p.gamma1, p.Gamma1, Gt2, L1) - e0));
        }
        s.checks.push_back(below("ODE residual at 100 times", worst_ode, 1e-9));
        s.checks.push_back(below("energy conservation", worst_energy, 1e-12));

        const double T = 30.0 / sd.A2;
        const double drift = 2.0 * Gt2 / (L1 * L1);
        const double shift = (separatrix(T, gt2_0, sd).gammat2 - drift * T) -
                             (separatrix(-T, gt2_0, sd).gammat2 + drift * T);
        s.checks.push_back(below("phase shift vs 2 arctan(1/chi)",
                                 std::abs(shift - 2.0 * std::atan(1.0 / sd.chi)), 1e-12));
        const auto pp = separatrix(T, gt2_0, sd);
        const auto pm = separatrix(-T, gt2_0, sd);
        const double approach =
            std::max(std::hypot(pp.gamma1 - sd.gamma1_min, pp.Gamma1 - L1),
                     std::hypot(pm.gamma1 - sd.gamma1_max, pm.Gamma1 - L1));
        s.checks.push_back(below("saddle approach at the truncation horizon", approach, 5e-9));
    });
}

// 5. Kappa closed form against the improper time quadrature, and harmonic
//    purity of the inner-octupole splitting potential in the drift phase.
inline Suite suite_kappa() {
    return detail::timed(5, "splitting closed forms", [&](Suite& s) {
        const double L1 = 1.0;
        double worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            const double Gt2 = 0.05 + 0.5 * k / 19.0;
            const SaddleData sd = saddle_data(L1, Gt2);
            auto f = [&](const SeparatrixPoint& p) {
                return std::sqrt(std::max(0.0, p.Gamma1 * p.Gamma1 - Gt2 * Gt2)) *
                       std::cos(p.gammat2);
            };
            const double quad = melnikov_numeric(f, sd, 0.0).value;
            const double kap = kappa(PI * Gt2 / (sd.A2 * L1 * L1), sd);
            worst = std::max(worst, std::abs(quad - kap) / kap);
        }
        s.checks.push_back(below("kappa vs quadrature rel err (20 values)", worst, 1e-6));

        const double Gt2 = 0.3;
        const SaddleData sd = saddle_data(L1, Gt2);
        auto h212 = [&](const SeparatrixPoint& p) {
            return h212_eval(p.gamma1, std::min(p.Gamma1, L1), Gt2, p.gammat2, L1, p.ecc1);
        };
        const int n = 16;
        std::vector<double> phases(n), values(n);
        for (int k = 0; k < n; ++k) {
            phases[static_cast<std::size_t>(k)] = TWO_PI * k / n;
            values[static_cast<std::size_t>(k)] =
                melnikov_numeric(h212, sd, phases[static_cast<std::size_t>(k)]).value;
        }
        double c_cos = 0.0, c_sin = 0.0;
        for (int k = 0; k < n; ++k) {
            c_cos += 2.0 / n * values[static_cast<std::size_t>(k)] *
                     std::cos(phases[static_cast<std::size_t>(k)]);
            c_sin += 2.0 / n * values[static_cast<std::size_t>(k)] *
                     std::sin(phases[static_cast<std::size_t>(k)]);
        }
        double impurity = std::abs(c_cos) / std::abs(c_sin);
        for (int k = 0; k < n; ++k)
            impurity = std::max(
                impurity,
                std::abs(values[static_cast<std::size_t>(k)] -
                         c_sin * std::sin(phases[static_cast<std::size_t>(k)])) /
                    std::abs(c_sin));
        s.checks.push_back(below("sine purity of the drift-phase harmonic", impurity, 1e-8));
    });
}

// 6. Scattering nondegeneracy.  The middle sub-check is a known structural
//    failure: the first-order jump derivative is exactly rank-deficient at
//    the distinguished zero (rows for the outer angle pair are proportional),
//    so its determinant cannot match the nonzero closed certificate there.
//    The check is kept faithful and reported as failing.
inline Suite suite_scattering() {
    return detail::timed(6, "scattering nondegeneracy", [&](Suite& s) {
        const MassSet ms = detail::desk_masses();
        const RegimeParams r;
        const CoefficientTable ct = CoefficientTable::build(ms, r);
        const TrigPoly23 tp(r);
        const double G2 = 0.3, L1 = r.L1;

        double scale = 0.0;
        for (double z : {0.3, 1.7, 2.9}) {
            const ScatteringJump sj =
                scattering_first_order(z, 2.0 * z, 0.5 * z, G2, +1, L1, tp, ct);
            scale = std::max({scale, std::abs(sj.S1), std::abs(sj.S2), std::abs(sj.S3)});
        }
        double worst_zero = 0.0;
        for (int sign : {+1, -1}) {
            const ScatteringJump sj =
                scattering_first_order(PI / 2.0, 0.0, 0.0, G2, sign, L1, tp, ct);
            worst_zero = std::max(
                {worst_zero, std::abs(sj.S1) / scale, std::abs(sj.S2) / scale,
                 std::abs(sj.S3) / scale});
        }
        s.checks.push_back(below("jumps vanish at the distinguished zero", worst_zero, 1e-10));

        double worst_det = 0.0;
        for (int sign : {+1, -1}) {
            const TransversalityResult tr = transversality_matrix(
                PI / 2.0, 0.0, 0.0, G2, sign, L1, tp, ct, 0.0);
            const double cert = reduced_det_certificate(G2, sign, L1, tp, ct);
            worst_det = std::max(worst_det, std::abs(tr.det / cert - 1.0));
        }
        Check det_check = below("determinant identity at the zero", worst_det, 1e-6);
        det_check.note =
            "known failure: the first-order matrix is exactly singular at this point "
            "(outer-angle rows proportional), so the nonzero closed certificate is "
            "unattainable; see the decision record accompanying the artifact";
        s.checks.push_back(det_check);

        // At least one channel nondegenerate across a 5x5x5 shape grid.
        double min_nd = 1e300;
        for (double d1 : {0.3, 0.4, 0.5, 0.6, 0.7})
            for (double d2 : {0.3, 0.4, 0.5, 0.6, 0.7})
                for (double f : {0.2, 0.35, 0.5, 0.65, 0.8}) {
                    RegimeParams rg = r;
                    rg.delta1 = d1;
                    rg.delta2 = d2;
                    rg.delta3 = f * d1;
                    const CoefficientTable cg = CoefficientTable::build(ms, rg);
                    const TrigPoly23 tg(rg);
                    const double cp = reduced_det_certificate(G2, +1, L1, tg, cg);
                    const double cm = reduced_det_certificate(G2, -1, L1, tg, cg);
                    const double sc = 0.5 * (std::abs(cp) + std::abs(cm));
                    min_nd = std::min(min_nd,
                                      std::max(std::abs(cp), std::abs(cm)) /
                                          std::max(sc, 1e-300));
                }
        s.checks.push_back(
            above("worst-case channel nondegeneracy on the shape grid", min_nd, 1e-12));
    });
}

// 7. Twist of the frequency-ratio map: nonvanishing determinant, the sign
//    change at L1/sqrt(3), the bottom-eigenvalue scale, and the closed
//    derivative table against finite differences of the averaged energy.
inline Suite suite_twist() {
    return detail::timed(7, "frequency-map twist", [&](Suite& s) {
        const MassSet ms = detail::desk_masses();
        const RegimeParams r;
        const CoefficientTable ct = CoefficientTable::build(ms, r);
        const double root3 = r.L1 / std::sqrt(3.0);

        double min_det = 1e300;
        for (int k = 0; k < 20; ++k) {
            const double G2 = 0.05 + 0.5 * k / 19.0;
            if (std::abs(G2 - root3) < 0.02) continue;
            min_det = std::min(min_det, std::abs(twist_matrix(G2, r, ct, 0.0).det));
        }
        s.checks.push_back(above("|det| away from the degeneracies", min_det, 0.0));

        {
            RegimeParams rd = r;
            rd.L3_star = 1e11;  // residual coupling shifts the root ~1/L3*^2
            const CoefficientTable cd = CoefficientTable::build(ms, rd);
            auto det = [&](double G2) { return twist_matrix(G2, rd, cd, 0.0).det; };
            const bool bracket = det(0.55) * det(0.60) < 0.0;
            const double root = bracket ? bisect_sign_change(det, 0.55, 0.60) : -1.0;
            Check c = below("determinant sign-change root vs L1/sqrt(3)",
                            std::abs(root - root3), 1e-6);
            c.pass = c.pass && bracket;
            s.checks.push_back(c);
        }

        double worst_ratio = 0.0;
        for (double L3s : {1e5, 1e9}) {
            RegimeParams rs = r;
            rs.L3_star = L3s;
            const CoefficientTable cs = CoefficientTable::build(ms, rs);
            const TwistData td = twist_matrix(0.3, rs, cs);
            const double ratio = std::abs(td.eigs[2]) / td.bottom_scale;
            worst_ratio = std::max(worst_ratio, std::max(ratio, 1.0 / ratio));
        }
        s.checks.push_back(
            below("bottom eigenvalue vs its scale (two depths)", worst_ratio, 3.0));

        double worst_fd = 0.0;
        for (int i = 0; i < 4; ++i)
            worst_fd = std::max(
                worst_fd, std::abs(detail::richardson_ratio(i, -1, 0.3, r, ms) - 1.0));
        const int pairs[7][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}, {3, 3}};
        for (const auto& p : pairs)
            worst_fd = std::max(
                worst_fd,
                std::abs(detail::richardson_ratio(p[0], p[1], 0.3, r, ms) - 1.0));
        s.checks.push_back(below("derivative table vs finite differences", worst_fd, 1e-3));
    });
}

// 8. Diffusion harness: a three-checkpoint itinerary moving all three slow
//    quantities in both directions, with certified jumps and a bounded drift
//    of the adiabatic invariant.
inline Suite suite_diffusion() {
    return detail::timed(8, "diffusion harness itinerary", [&](Suite& s) {
        const MassSet ms = detail::desk_masses();
        const RegimeParams r;
        Itinerary it;
        it.nu = {0.52, 0.48, 0.52};
        it.eta = {0.52, 0.55, 0.50};
        it.zeta = {2.0004, 2.0008, 2.0002};
        const DiffusionLog lg = diffusion_harness(it, r, ms, 0.3);
        double worst_err = 0.0;
        for (const auto& c : lg.checkpoints)
            worst_err = std::max({worst_err, c.err_nu, c.err_eta, c.err_zeta});
        Check errs = below("checkpoint errors (3 legs, both directions)", worst_err,
                           it.delta);
        errs.pass = errs.pass && lg.checkpoints.size() == 3;
        s.checks.push_back(errs);

        double min_cert = lg.batches.empty() ? -1.0 : 1e300;
        for (const auto& b : lg.batches) {
            double aligned = 1e300;
            for (int c = 0; c < 3; ++c)
                aligned = std::min(aligned, b.S[static_cast<std::size_t>(c)] *
                                                b.pattern[static_cast<std::size_t>(c)] /
                                                std::abs(b.S[static_cast<std::size_t>(c)]));
            min_cert = std::min({min_cert, b.margin, b.det_A, aligned});
        }
        s.checks.push_back(
            above("octant certificate validity over all batches", min_cert, 0.0));
        s.checks.push_back(below("adiabatic invariant drift", lg.adiabatic_drift, 0.05));
    });
}

// 9. Jump-count scaling of a fixed outer ascent across strip scales.
inline Suite suite_scaling() {
    return detail::timed(9, "jump-count scaling exponents", [&](Suite& s) {
        const MassSet ms = detail::desk_masses();
        const RegimeParams base;
        const ScalingFit fit =
            time_scaling_probe({30.0, 40.0, 50.0}, {1e5, 2e5, 4e5}, base, ms);
        s.checks.push_back(
            below("outer-scale exponent vs 6", std::abs(fit.exp_L3 - 6.0), 1.0));
        s.checks.push_back(
            below("strip-scale exponent vs -9", std::abs(fit.exp_L2 + 9.0), 1.0));
    });
}

// 10. Full four-body conservation: symplectic integration over many outer
//     periods keeps the energy and the total angular momentum norm, and the
//     orbital-element projections round-trip.
inline Suite suite_full_problem(int outer_periods = 1000, int steps_per_inner = 220) {
    return detail::timed(10, "full-problem conservation", [&](Suite& s) {
        const MassSet ms(1.0, 1e-3, 1e-3, 1e-3);
        const double a1 = 1.0, a2 = 5.0, a3 = 20.0;
        DepritState d;
        d.L = {0.0, ms.mu[1] * std::sqrt(ms.M[1] * a1), ms.mu[2] * std::sqrt(ms.M[2] * a2),
               ms.mu[3] * std::sqrt(ms.M[3] * a3)};
        d.Gamma = {0.0, 0.9 * d.L[1], 0.85 * d.L[2], 0.95 * d.L[3]};
        d.Psi1 = 0.9 * (d.Gamma[1] + d.Gamma[2]);
        d.Psi2 = 0.95 * (d.Psi1 + d.Gamma[3]);
        d.Psi3 = 0.7 * d.Psi2;
        d.ell = {0.0, 0.3, 1.9, 5.1};
        d.gamma = {0.0, 0.8, 2.7, 1.1};
        d.psi = {0.0, 1.4, 3.0, 0.2};

        // Projection round trip through the vector reconstruction.
        const JacobiPhase jp0 = deprit_to_jacobi(d, ms);
        const DepritState d2 = jacobi_to_deprit(jp0, ms);
        const JacobiPhase jp1 = deprit_to_jacobi(d2, ms);
        double worst_rt = 0.0;
        for (int j = 1; j <= 3; ++j) {
            const std::size_t sj = static_cast<std::size_t>(j);
            worst_rt = std::max(
                worst_rt, norm(jp1.q[sj] - jp0.q[sj]) / std::max(1.0, norm(jp0.q[sj])));
            worst_rt = std::max(
                worst_rt, norm(jp1.p[sj] - jp0.p[sj]) / std::max(1.0, norm(jp0.p[sj])));
        }
        s.checks.push_back(below("element projection round trip", worst_rt, 1e-9));

        CartesianPhase c = from_jacobi(jp0, ms);
        const Vec3 ytot = c.y[0] + c.y[1] + c.y[2] + c.y[3];
        for (int i = 0; i < 4; ++i) c.y[i] -= (ms.m[i] / ms.M[3]) * ytot;

        using State = std::vector<double>;
        State q(12), p(12);
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 3; ++k) {
                q[3 * i + k] = (k == 0 ? c.x[i].x : k == 1 ? c.x[i].y : c.x[i].z);
                p[3 * i + k] = (k == 0 ? c.y[i].x : k == 1 ? c.y[i].y : c.y[i].z);
            }
        SymplecticSeparable<State> integ(
            [&](const State& qq, State& dp) {
                dp.assign(12, 0.0);
                for (int i = 0; i < 4; ++i)
                    for (int j = i + 1; j < 4; ++j) {
                        const double rx = qq[3 * j] - qq[3 * i];
                        const double ry = qq[3 * j + 1] - qq[3 * i + 1];
                        const double rz = qq[3 * j + 2] - qq[3 * i + 2];
                        const double r2 = rx * rx + ry * ry + rz * rz;
                        const double w = ms.m[i] * ms.m[j] / (r2 * std::sqrt(r2));
                        dp[3 * i] += w * rx;
                        dp[3 * i + 1] += w * ry;
                        dp[3 * i + 2] += w * rz;
                        dp[3 * j] -= w * rx;
                        dp[3 * j + 1] -= w * ry;
                        dp[3 * j + 2] -= w * rz;
                    }
            },
            [&](const State& pp, State& dq) {
                dq.resize(12);
                for (int i = 0; i < 4; ++i)
                    for (int k = 0; k < 3; ++k) dq[3 * i + k] = pp[3 * i + k] / ms.m[i];
            });

        auto assemble = [&]() {
            CartesianPhase cc;
            for (int i = 0; i < 4; ++i) {
                cc.x[i] = {q[3 * i], q[3 * i + 1], q[3 * i + 2]};
                cc.y[i] = {p[3 * i], p[3 * i + 1], p[3 * i + 2]};
            }
            return cc;
        };
        const double H0 = hamiltonian_cartesian(c, ms);
        const double Psi2_0 = norm(to_jacobi(c, ms).C_total());

        const double T1 = TWO_PI * std::sqrt(a1 * a1 * a1 / ms.M[1]);
        const double T3 = TWO_PI * std::sqrt(a3 * a3 * a3 / ms.M[3]);
        const double h = T1 / steps_per_inner;
        const long steps = static_cast<long>(outer_periods * T3 / h);
        double worst_H = 0.0, worst_P = 0.0;
        for (long i = 1; i <= steps; ++i) {
            integ.step(q, p, h, 6);
            if (i % 1024 == 0 || i == steps) {
                const CartesianPhase cc = assemble();
                worst_H = std::max(worst_H, std::abs(hamiltonian_cartesian(cc, ms) - H0));
                worst_P = std::max(worst_P,
                                   std::abs(norm(to_jacobi(cc, ms).C_total()) - Psi2_0));
            }
        }
        s.checks.push_back(below("energy drift over the outer periods", worst_H, 1e-8));
        s.checks.push_back(below("total angular momentum drift", worst_P, 1e-10));
    });
}

inline std::vector<Suite> verification_suites() {
    return {suite_symplectic(), suite_closed_forms(), suite_expansion_orders(),
            suite_separatrix(), suite_kappa(),        suite_scattering(),
            suite_twist()};
}

}  // namespace h4bp::checks
