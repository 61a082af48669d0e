// Shared numerical kernels: quadrature, finite differences, integrators.
#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

#include "h4bp/common.hpp"

namespace h4bp {

// ---------------------------------------------------------------------------
// Deterministic pairwise summation (fixed tree, thread-count independent).
// ---------------------------------------------------------------------------
inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    const std::size_t n = hi - lo;
    if (n == 0) return 0.0;
    if (n == 1) return v[lo];
    if (n == 2) return v[lo] + v[lo + 1];
    const std::size_t mid = lo + n / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v, 0, v.size()); }

// ---------------------------------------------------------------------------
// Periodic quadrature: equispaced trapezoid over [0, 2*pi)^d, spectrally
// accurate for analytic periodic integrands.  Nodes doubled until two
// successive refinements agree to `tol`.  Returns the *average* over the
// torus (i.e. integral / (2*pi)^d).
// ---------------------------------------------------------------------------
inline double quad_periodic_avg(const std::function<double(double)>& f,
                                double tol = 1e-11, int n0 = 16, int nmax = 1 << 16) {
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int n = n0; n <= nmax; n *= 2) {
        std::vector<double> vals(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) vals[static_cast<std::size_t>(i)] = f(TWO_PI * i / n);
        const double cur = pairwise_sum(vals) / n;
        // Convergence is judged against the integrand's own magnitude so that
        // integrands far from unit scale still resolve to full relative accuracy.
        double scale = 0.0;
        for (const double v : vals) scale += std::abs(v);
        scale = std::max(scale / n, std::abs(cur));
        if (!std::isnan(prev) && std::abs(cur - prev) <= tol * scale) return cur;
        prev = cur;
    }
    throw NonConvergent("quad_periodic_avg: node doubling did not converge");
}

inline double quad_periodic_avg2(const std::function<double(double, double)>& f,
                                 double tol = 1e-11, int n0 = 16, int nmax = 2048) {
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int n = n0; n <= nmax; n *= 2) {
        std::vector<double> vals(static_cast<std::size_t>(n) * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                vals[static_cast<std::size_t>(i) * n + j] = f(TWO_PI * i / n, TWO_PI * j / n);
        const double cur = pairwise_sum(vals) / (static_cast<double>(n) * n);
        double scale = 0.0;
        for (const double v : vals) scale += std::abs(v);
        scale = std::max(scale / (static_cast<double>(n) * n), std::abs(cur));
        if (!std::isnan(prev) && std::abs(cur - prev) <= tol * scale) return cur;
        prev = cur;
    }
    throw NonConvergent("quad_periodic_avg2: node doubling did not converge");
}

// ---------------------------------------------------------------------------
// Adaptive line quadrature (Simpson with recursive bisection).
// ---------------------------------------------------------------------------
struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
};

namespace detail {
inline void adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                             double fa, double fm, double fb, double whole, double tol,
                             int depth, QuadResult& out) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double h = b - a;
    const double left = h / 12.0 * (fa + 4.0 * flm + fm);
    const double right = h / 12.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        out.value += left + right + delta / 15.0;
        out.error_estimate += std::abs(delta) / 15.0;
        return;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, out);
    adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, out);
}
}  // namespace detail

inline QuadResult quad_line(const std::function<double(double)>& f, double a, double b,
                            double tol = 1e-12, int max_depth = 40) {
    QuadResult out;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    detail::adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, max_depth, out);
    return out;
}

// Integral over the real line of an exponentially decaying integrand, via the
// compactifying substitution s = tanh(rate*t/2):
//   \int_R g(t) dt = \int_{-1}^{1} g(t(s)) * (2/rate) / (1-s^2) ds.
inline QuadResult quad_line_decaying(const std::function<double(double)>& g, double rate,
                                     double tol = 1e-12) {
    const double edge = 1.0 - 1e-12;
    auto integrand = [&](double s) {
        const double t = (2.0 / rate) * std::atanh(s);
        return g(t) * (2.0 / rate) / (1.0 - s * s);
    };
    return quad_line(integrand, -edge, edge, tol);
}

// ---------------------------------------------------------------------------
// Finite differences with one Richardson step (effective order 4).
// ---------------------------------------------------------------------------
struct FdResult {
    double value = 0.0;
    double error_estimate = 0.0;
};

inline FdResult fd_derivative(const std::function<double(double)>& f, double x, double h) {
    auto central = [&](double hh) { return (f(x + hh) - f(x - hh)) / (2.0 * hh); };
    const double d1 = central(h), d2 = central(h / 2.0);
    FdResult r;
    r.value = (4.0 * d2 - d1) / 3.0;
    r.error_estimate = std::abs(d2 - d1) / 3.0;
    return r;
}

inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto fi = [&](double xi) {
            std::vector<double> xx = x;
            xx[i] = xi;
            return f(xx);
        };
        g[i] = fd_derivative(fi, x[i], h).value;
    }
    return g;
}

inline std::vector<std::vector<double>> fd_hessian(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double h = 1e-4) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> H(n, std::vector<double>(n, 0.0));
    const double f0 = f(x);
    auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
        std::vector<double> xx = x;
        xx[i] += di;
        xx[j] += dj;
        return f(xx);
    };
    for (std::size_t i = 0; i < n; ++i) {
        auto diag = [&](double hh) {
            return (at(i, hh, i, 0.0) - 2.0 * f0 + at(i, -hh, i, 0.0)) / (hh * hh);
        };
        const double d1 = diag(h), d2 = diag(h / 2.0);
        H[i][i] = (4.0 * d2 - d1) / 3.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            auto mixed = [&](double hh) {
                return (at(i, hh, j, hh) - at(i, hh, j, -hh) - at(i, -hh, j, hh) +
                        at(i, -hh, j, -hh)) /
                       (4.0 * hh * hh);
            };
            const double m1 = mixed(h), m2 = mixed(h / 2.0);
            H[i][j] = H[j][i] = (4.0 * m2 - m1) / 3.0;
        }
    }
    return H;
}

inline std::vector<std::vector<double>> fd_jacobian(
    const std::function<std::vector<double>(const std::vector<double>&)>& f,
    std::vector<double> x, double h = 1e-5) {
    const std::vector<double> f0 = f(x);
    const std::size_t m = f0.size(), n = x.size();
    std::vector<std::vector<double>> J(m, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        auto col = [&](double hh) {
            std::vector<double> xp = x, xm = x;
            xp[j] += hh;
            xm[j] -= hh;
            const auto fp = f(xp), fm = f(xm);
            std::vector<double> c(m);
            for (std::size_t i = 0; i < m; ++i) c[i] = (fp[i] - fm[i]) / (2.0 * hh);
            return c;
        };
        const auto c1 = col(h), c2 = col(h / 2.0);
        for (std::size_t i = 0; i < m; ++i) J[i][j] = (4.0 * c2[i] - c1[i]) / 3.0;
    }
    return J;
}

// ---------------------------------------------------------------------------
// Root finding: Newton safeguarded by bisection on a bracketing interval.
// ---------------------------------------------------------------------------
inline double newton_bisect(const std::function<double(double)>& f,
                            const std::function<double(double)>& df, double x0, double lo,
                            double hi, double tol = 1e-13, int max_iter = 100) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw DomainError("newton_bisect: endpoints do not bracket a root");
    double x = std::clamp(x0, lo, hi);
    for (int it = 0; it < max_iter; ++it) {
        const double fx = f(x);
        if (std::abs(fx) < tol) return x;
        if (fx * flo < 0.0) {
            hi = x;
        } else {
            lo = x;
            flo = fx;
        }
        const double d = df(x);
        double xn = (d != 0.0) ? x - fx / d : 0.5 * (lo + hi);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x) < 1e-16 * std::max(1.0, std::abs(x))) return xn;
        x = xn;
    }
    throw NoConvergence("newton_bisect: max iterations reached");
}

// Bracket then bisect a scalar sign change to tolerance `xtol`.
inline double bisect_sign_change(const std::function<double(double)>& f, double lo, double hi,
                                 double xtol = 1e-12, int max_iter = 200) {
    double flo = f(lo), fhi = f(hi);
    if (flo * fhi > 0.0) throw DomainError("bisect_sign_change: no bracket");
    for (int it = 0; it < max_iter && hi - lo > xtol; ++it) {
        const double m = 0.5 * (lo + hi), fmv = f(m);
        if (fmv == 0.0) return m;
        if (flo * fmv < 0.0) {
            hi = m;
            fhi = fmv;
        } else {
            lo = m;
            flo = fmv;
        }
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Integrators
// ---------------------------------------------------------------------------
struct IntegratorConfig {
    enum class Scheme { Symplectic4, Symplectic6, AdaptiveRk };
    Scheme scheme = Scheme::Symplectic6;
    double step = 1e-3;        // fixed step for symplectic schemes
    double tolerance = 1e-10;  // local error tolerance for adaptive scheme
    long max_steps = 200000000L;
};

// Separable system q' = p/mass-form, p' = F(q): leapfrog (Stormer-Verlet)
// composed via Yoshida coefficients for orders 4 and 6.  `accel` writes the
// momentum derivative (force) into `dp`; `vel` writes the position derivative
// into `dq`.  Both conserve any rotation-invariant first integrals of the
// exact flow to round-off.
template <typename State>
class SymplecticSeparable {
  public:
    using Force = std::function<void(const State& q, State& dp)>;
    using Velocity = std::function<void(const State& p, State& dq)>;

    SymplecticSeparable(Force force, Velocity vel) : force_(std::move(force)), vel_(std::move(vel)) {}

    // One leapfrog step of size h (kick-drift-kick).
    void leapfrog(State& q, State& p, double h) {
        force_(q, scratch_);
        axpy(p, 0.5 * h, scratch_);
        vel_(p, scratch_);
        axpy(q, h, scratch_);
        force_(q, scratch_);
        axpy(p, 0.5 * h, scratch_);
    }

    void step(State& q, State& p, double h, int order) {
        if (order <= 2) {
            leapfrog(q, p, h);
        } else if (order == 4) {
            static const double c = std::cbrt(2.0);
            const double w1 = 1.0 / (2.0 - c), w0 = -c / (2.0 - c);
            leapfrog(q, p, w1 * h);
            leapfrog(q, p, w0 * h);
            leapfrog(q, p, w1 * h);
        } else {
            // Yoshida 6th-order solution A coefficients.
            static const double w[4] = {1.31518632068391121888424972823886251,
                                        -1.17767998417887100694641568096431573,
                                        0.235573213359358133684793182978534602,
                                        0.784513610477557263819497633866349876};
            leapfrog(q, p, w[3] * h);
            leapfrog(q, p, w[2] * h);
            leapfrog(q, p, w[1] * h);
            leapfrog(q, p, w[0] * h);
            leapfrog(q, p, w[1] * h);
            leapfrog(q, p, w[2] * h);
            leapfrog(q, p, w[3] * h);
        }
    }

  private:
    static void axpy(State& y, double a, const State& x) {
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
    }
    Force force_;
    Velocity vel_;
    State scratch_{};
};

// Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) for general ODEs.
class Rk45 {
  public:
    using Rhs = std::function<void(double t, const std::vector<double>& y,
                                   std::vector<double>& dy)>;

    // Integrate y from t0 to t1; returns final state.  `observer`, if given,
    // is called after every accepted step.
    static std::vector<double> integrate(
        const Rhs& rhs, std::vector<double> y, double t0, double t1,
        const IntegratorConfig& cfg,
        const std::function<void(double, const std::vector<double>&)>& observer = nullptr) {
        const std::size_t n = y.size();
        std::vector<std::vector<double>> k(7, std::vector<double>(n));
        std::vector<double> ytmp(n), y5(n), y4(n);
        double t = t0;
        double h = (t1 > t0 ? 1.0 : -1.0) * std::max(1e-10, std::abs(cfg.step));
        long steps = 0;
        if (observer) observer(t, y);
        while ((t1 - t) * (t1 - t0) > 0.0) {
            if (++steps > cfg.max_steps) throw MaxStepsExceeded("Rk45: max steps");
            if ((t + h - t1) * (t1 - t0) > 0.0) h = t1 - t;
            rhs(t, y, k[0]);
            stage(rhs, y, k, ytmp, t, h, 1);
            stage(rhs, y, k, ytmp, t, h, 2);
            stage(rhs, y, k, ytmp, t, h, 3);
            stage(rhs, y, k, ytmp, t, h, 4);
            stage(rhs, y, k, ytmp, t, h, 5);
            for (std::size_t i = 0; i < n; ++i)
                y5[i] = y[i] + h * (B5[0] * k[0][i] + B5[2] * k[2][i] + B5[3] * k[3][i] +
                                    B5[4] * k[4][i] + B5[5] * k[5][i]);
            rhs(t + h, y5, k[6]);
            double err = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = h * (E[0] * k[0][i] + E[2] * k[2][i] + E[3] * k[3][i] +
                                      E[4] * k[4][i] + E[5] * k[5][i] + E[6] * k[6][i]);
                const double sc = cfg.tolerance * (1.0 + std::abs(y[i]));
                err = std::max(err, std::abs(e) / sc);
            }
            if (err <= 1.0) {
                t += h;
                y = y5;
                if (observer) observer(t, y);
            }
            const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
            h *= fac;
            if (std::abs(h) < 1e-15 * std::max(1.0, std::abs(t)))
                throw StepFailure("Rk45: step underflow");
        }
        return y;
    }

  private:
    static constexpr double A[6][6] = {
        {1.0 / 5, 0, 0, 0, 0, 0},
        {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
        {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
        {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
    static constexpr double C[6] = {1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr double B5[6] = {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192,
                                     -2187.0 / 6784, 11.0 / 84};
    static constexpr double E[7] = {35.0 / 384 - 5179.0 / 57600,
                                    0,
                                    500.0 / 1113 - 7571.0 / 16695,
                                    125.0 / 192 - 393.0 / 640,
                                    -2187.0 / 6784 + 92097.0 / 339200,
                                    11.0 / 84 - 187.0 / 2100,
                                    -1.0 / 40};

    static void stage(const Rhs& rhs, const std::vector<double>& y,
                      std::vector<std::vector<double>>& k, std::vector<double>& ytmp, double t,
                      double h, int s) {
        const std::size_t n = y.size();
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < s; ++j) acc += A[s - 1][j] * k[j][i];
            ytmp[i] = y[i] + h * acc;
        }
        rhs(t + C[s - 1] * h, ytmp, k[s]);
    }
};

// Generic canonical Hamiltonian flow (z = (q..., p...)) driven by a
// finite-difference or analytic gradient.  Used for low-dimensional model
// flows; the full 4-body problem uses SymplecticSeparable instead.
inline void hamiltonian_rhs(const std::function<double(const std::vector<double>&)>& H,
                            const std::vector<double>& z, std::vector<double>& dz,
                            double h = 1e-6) {
    const std::size_t d = z.size() / 2;
    const auto g = fd_gradient(H, z, h);
    dz.resize(z.size());
    for (std::size_t i = 0; i < d; ++i) {
        dz[i] = g[d + i];   // dq/dt = dH/dp
        dz[d + i] = -g[i];  // dp/dt = -dH/dq
    }
}

}  // namespace h4bp
