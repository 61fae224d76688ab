#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace shapegeo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct TimeGrid {
    double t0 = 0.0, t1 = 1.0;
    int steps = 100;

    TimeGrid() = default;
    TimeGrid(double a, double b, int n) : t0(a), t1(b), steps(n) {
        if (!(b > a) || n < 1) throw DomainError("time grid needs t1 > t0 and steps >= 1");
    }
    double dt() const { return (t1 - t0) / steps; }
    double at(int i) const { return i == steps ? t1 : t0 + i * dt(); }
};

struct ODESolution {
    std::vector<double> times;
    std::vector<Vec> states;

    const Vec& back() const { return states.back(); }
    std::size_t size() const { return times.size(); }
};

inline bool all_finite(const Vec& y) { return y.allFinite(); }

// Classical fixed-step RK4. Every `stride`-th step (and the last) is stored.
template <class Rhs>
ODESolution rk4_integrate(Rhs&& rhs, const Vec& y0, const TimeGrid& grid, int stride = 1) {
    ODESolution sol;
    Vec y = y0;
    const double h = grid.dt();
    sol.times.push_back(grid.t0);
    sol.states.push_back(y);
    for (int i = 0; i < grid.steps; ++i) {
        const double t = grid.at(i);
        Vec k1 = rhs(t, y);
        Vec k2 = rhs(t + 0.5 * h, Vec(y + 0.5 * h * k1));
        Vec k3 = rhs(t + 0.5 * h, Vec(y + 0.5 * h * k2));
        Vec k4 = rhs(t + h, Vec(y + h * k3));
        Vec next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!all_finite(next)) throw IntegrationDiverged(t);
        y = std::move(next);
        if ((i + 1) % stride == 0 || i + 1 == grid.steps) {
            sol.times.push_back(grid.at(i + 1));
            sol.states.push_back(y);
        }
    }
    return sol;
}

struct AdaptiveOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double h0 = 1e-3;
    double hmin = 1e-14;
    long max_steps = 2000000;
};

// Dormand-Prince 5(4) with local extrapolation. Output is sampled on `grid`
// (the integrator lands exactly on every grid time).
template <class Rhs>
ODESolution dopri45_integrate(Rhs&& rhs, const Vec& y0, const TimeGrid& grid,
                              const AdaptiveOptions& opt = {}) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    ODESolution sol;
    Vec y = y0;
    double t = grid.t0;
    double h = std::min(opt.h0, grid.dt());
    sol.times.push_back(t);
    sol.states.push_back(y);
    Vec k1 = rhs(t, y);
    long count = 0;
    for (int i = 1; i <= grid.steps; ++i) {
        const double target = grid.at(i);
        while (t < target) {
            if (++count > opt.max_steps) throw IntegrationDiverged(t);
            bool last = false;
            double hs = h;
            if (t + hs >= target) {
                hs = target - t;
                last = true;
            }
            Vec k2 = rhs(t + c2 * hs, Vec(y + hs * a21 * k1));
            Vec k3 = rhs(t + c3 * hs, Vec(y + hs * (a31 * k1 + a32 * k2)));
            Vec k4 = rhs(t + c4 * hs, Vec(y + hs * (a41 * k1 + a42 * k2 + a43 * k3)));
            Vec k5 = rhs(t + c5 * hs, Vec(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
            Vec k6 = rhs(t + hs, Vec(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
            Vec yn = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            Vec k7 = rhs(t + hs, yn);
            Vec err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            double en = 0.0;
            bool finite = yn.allFinite() && err.allFinite();
            if (finite) {
                for (Eigen::Index j = 0; j < y.size(); ++j) {
                    double sc = opt.atol + opt.rtol * std::max(std::abs(y[j]), std::abs(yn[j]));
                    en = std::max(en, std::abs(err[j]) / sc);
                }
            }
            if (finite && en <= 1.0) {
                t = last ? target : t + hs;
                y = std::move(yn);
                k1 = std::move(k7);
                double fac = en > 0 ? 0.9 * std::pow(en, -0.2) : 5.0;
                if (!last) h = hs * std::clamp(fac, 0.2, 5.0);
            } else {
                double fac = finite ? std::clamp(0.9 * std::pow(en, -0.25), 0.1, 0.5) : 0.25;
                h = hs * fac;
                if (h < opt.hmin) throw IntegrationDiverged(t);
            }
        }
        sol.times.push_back(target);
        sol.states.push_back(y);
    }
    return sol;
}

inline Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

template <class F>
Mat sym_apply(const Mat& s, F&& f) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(s));
    Vec lam = es.eigenvalues().unaryExpr(f);
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

inline Mat sym_exp(const Mat& s) {
    return sym_apply(s, [](double x) { return std::exp(x); });
}

inline Mat sym_log(const Mat& p) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(p));
    if (es.eigenvalues().minCoeff() <= 0.0 || !p.allFinite())
        throw DomainError("sym_log needs a symmetric positive definite matrix");
    Vec lam = es.eigenvalues().array().log();
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

inline Mat sym_sqrt(const Mat& p) {
    return sym_apply(p, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

inline Mat sym_invsqrt(const Mat& p) {
    return sym_apply(p, [](double x) { return 1.0 / std::sqrt(x); });
}

template <class F>
Vec finite_diff_gradient(F&& f, const Vec& x, double h = 1e-5) {
    Vec g(x.size());
    Vec xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        xp[i] = xi + h;
        const double fp = f(xp);
        xp[i] = xi - h;
        const double fm = f(xp);
        xp[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

struct LbfgsOptions {
    int memory = 12;
    int max_iter = 2000;
    double grad_tol = 1e-6;   // on max |g|
    double f_rel_tol = 0.0;   // stop when the relative decrease stalls below this
    int stall_iters = 25;
};

struct LbfgsResult {
    Vec x;
    double f = 0.0;
    double grad_max = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;
};

// Limited-memory BFGS with Armijo backtracking. `fg(x, grad)` returns f and fills grad.
// The accepted values are monotone non-increasing by construction.
template <class FG>
LbfgsResult lbfgs_minimize(FG&& fg, Vec x, const LbfgsOptions& opt = {}) {
    LbfgsResult res;
    Vec g(x.size());
    double f = fg(x, g);
    res.history.push_back(f);
    std::vector<Vec> S, Y;
    std::vector<double> rho;
    int stall = 0;
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
            res.converged = true;
            break;
        }
        // two-loop recursion
        Vec q = g;
        std::vector<double> alpha(S.size());
        for (int i = int(S.size()) - 1; i >= 0; --i) {
            alpha[i] = rho[i] * S[i].dot(q);
            q -= alpha[i] * Y[i];
        }
        if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
        for (std::size_t i = 0; i < S.size(); ++i) {
            double beta = rho[i] * Y[i].dot(q);
            q += (alpha[i] - beta) * S[i];
        }
        Vec d = -q;
        double slope = g.dot(d);
        if (!(slope < 0)) {
            S.clear(); Y.clear(); rho.clear();
            d = -g;
            slope = -g.squaredNorm();
        }
        double step = 1.0;
        if (S.empty()) step = std::min(1.0, 1.0 / std::max(1e-300, g.lpNorm<Eigen::Infinity>()));
        Vec xn, gn(x.size());
        double fn = f;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            xn = x + step * d;
            fn = fg(xn, gn);
            // near the optimum the Armijo decrease drowns in roundoff; a step that
            // does not raise f and shrinks the gradient is taken then
            if (std::isfinite(fn) && (fn <= f + 1e-4 * step * slope || (fn <= f && gn.norm() < g.norm()))) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        Vec s = xn - x, y = gn - g;
        double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            S.push_back(s); Y.push_back(y); rho.push_back(1.0 / sy);
            if (int(S.size()) > opt.memory) {
                S.erase(S.begin()); Y.erase(Y.begin()); rho.erase(rho.begin());
            }
        }
        double dec = f - fn;
        x = std::move(xn);
        g = gn;
        f = fn;
        res.history.push_back(f);
        if (opt.f_rel_tol > 0 && dec <= opt.f_rel_tol * std::max(1.0, std::abs(f))) {
            if (++stall >= opt.stall_iters) break;
        } else {
            stall = 0;
        }
    }
    res.iterations = it;
    res.x = std::move(x);
    res.f = f;
    res.grad_max = g.lpNorm<Eigen::Infinity>();
    if (res.grad_max <= opt.grad_tol) res.converged = true;
    return res;
}

}  // namespace shapegeo
