#pragma once
#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "kernels.hpp"
#include "numerics.hpp"
#include "spectral.hpp"

namespace shapegeo::diff {

using spectral::cd;
using spectral::CVec;
using spectral::pi;

// u(theta) = sum_{|n| <= nmax} a_n e^{in theta} with a_{-n} = conj(a_n); only n >= 0 is stored.
struct FourierField {
    CVec a;

    FourierField() = default;
    explicit FourierField(int nmax) : a(CVec::Zero(nmax + 1)) {}
    explicit FourierField(CVec c) : a(std::move(c)) { a[0] = a[0].real(); }

    int nmax() const { return int(a.size()) - 1; }
    cd operator[](int n) const {
        if (std::abs(n) > nmax()) return 0.0;
        return n >= 0 ? a[n] : std::conj(a[-n]);
    }

    // Nodal values on theta_j = 2 pi j / m. Needs m > 2 nmax.
    Vec nodal(int m) const {
        if (m <= 2 * nmax()) throw DomainError("grid too coarse for the field");
        CVec F = CVec::Zero(m);
        for (int n = 0; n <= nmax(); ++n) {
            F[n] = double(m) * a[n];
            if (n > 0) F[m - n] = double(m) * std::conj(a[n]);
        }
        return spectral::ifft(F);
    }

    // Truncation of nodal samples to modes |n| <= nmax.
    static FourierField from_nodal(const Vec& v, int nmax) {
        const int m = int(v.size());
        CVec F = spectral::fft(v) / double(m);
        FourierField f(nmax);
        for (int n = 0; n <= nmax && n < (m + 1) / 2; ++n) f.a[n] = F[n];
        f.a[0] = f.a[0].real();
        return f;
    }

    double eval(double x) const {
        double s = a[0].real();
        cd e = std::polar(1.0, x), p = e;
        for (int n = 1; n <= nmax(); ++n, p *= e) s += 2.0 * (a[n] * p).real();
        return s;
    }

    FourierField deriv(int order = 1) const {
        FourierField d(nmax());
        for (int n = 1; n <= nmax(); ++n) d.a[n] = std::pow(cd(0, n), order) * a[n];
        return d;
    }

    FourierField resized(int nm) const {
        FourierField f(nm);
        const int k = std::min(nm, nmax());
        f.a.head(k + 1) = a.head(k + 1);
        return f;
    }

    static FourierField sin_mode(int n, double amp = 1.0) {
        FourierField f(n);
        f.a[n] = cd(0, -0.5 * amp);
        return f;
    }
    static FourierField cos_mode(int n, double amp = 1.0) {
        FourierField f(n);
        f.a[n] = n == 0 ? cd(amp) : cd(0.5 * amp);
        return f;
    }
};

inline FourierField operator+(const FourierField& x, const FourierField& y) {
    const int n = std::max(x.nmax(), y.nmax());
    FourierField r = x.resized(n);
    r.a += y.resized(n).a;
    return r;
}
inline FourierField operator*(double s, const FourierField& x) { return FourierField(CVec(s * x.a)); }
inline FourierField operator-(const FourierField& x, const FourierField& y) { return x + (-1.0) * y; }

inline int fft_size_above(int n) {
    int m = 8;
    while (m <= n) m *= 2;
    return m;
}

// Exact product, truncated to modes <= nout (default: the full product).
inline FourierField multiply(const FourierField& x, const FourierField& y, int nout = -1) {
    const int full = x.nmax() + y.nmax();
    if (nout < 0) nout = full;
    const int m = fft_size_above(2 * full + 1);
    Vec p = x.nodal(m).cwiseProduct(y.nodal(m));
    return FourierField::from_nodal(p, std::min(nout, full));
}

// ------------------------------------------------------------- inertia

struct InertiaOperator {
    enum class Kind { L2, Hs, HomH1, MuH1, HalfH, WeilPetersson } kind = Kind::L2;
    double s = 1.0;  // Sobolev order for Hs

    static InertiaOperator l2() { return {}; }
    static InertiaOperator hs(double s) { return {Kind::Hs, s}; }
    static InertiaOperator hom_h1() { return {Kind::HomH1}; }
    static InertiaOperator mu_h1() { return {Kind::MuH1}; }
    static InertiaOperator half_h() { return {Kind::HalfH}; }
    static InertiaOperator weil_petersson() { return {Kind::WeilPetersson}; }

    double lambda(int n) const {
        const double k = std::abs(n);
        switch (kind) {
            case Kind::L2: return 1.0;
            case Kind::Hs: return std::pow(1.0 + k * k, s);
            case Kind::HomH1: return k * k;
            case Kind::MuH1: return n == 0 ? 1.0 : k * k;
            case Kind::HalfH: return k;
            case Kind::WeilPetersson: return std::abs(k * k * k - k);
        }
        return 1.0;
    }
    std::vector<int> kernel_modes() const {
        switch (kind) {
            case Kind::HomH1:
            case Kind::HalfH: return {0};
            case Kind::WeilPetersson: return {-1, 0, 1};
            default: return {};
        }
    }
    bool in_kernel(int n) const { return lambda(n) == 0.0; }

    std::string name() const {
        switch (kind) {
            case Kind::L2: return "L2";
            case Kind::Hs: return "Hs(" + std::to_string(s) + ")";
            case Kind::HomH1: return "HomH1";
            case Kind::MuH1: return "MuH1";
            case Kind::HalfH: return "HalfH";
            case Kind::WeilPetersson: return "WeilPetersson";
        }
        return "?";
    }
};

inline InertiaOperator named_preset(const std::string& name) {
    if (name == "burgers") return InertiaOperator::l2();
    if (name == "camassa_holm") return InertiaOperator::hs(1.0);
    if (name == "hunter_saxton") return InertiaOperator::hom_h1();
    if (name == "mu_hs") return InertiaOperator::mu_h1();
    if (name == "mclm") return InertiaOperator::half_h();
    if (name == "weil_petersson") return InertiaOperator::weil_petersson();
    throw UnknownPreset(name);
}

inline FourierField apply_inertia(const InertiaOperator& L, const FourierField& u) {
    FourierField m(u.nmax());
    for (int n = 0; n <= u.nmax(); ++n) m.a[n] = L.lambda(n) * u.a[n];
    return m;
}

inline FourierField invert_inertia(const InertiaOperator& L, const FourierField& m) {
    FourierField u(m.nmax());
    for (int n = 0; n <= m.nmax(); ++n) {
        if (L.in_kernel(n)) {
            if (std::abs(m.a[n]) >= 1e-12)
                throw NotInRange("momentum has a component on kernel mode " + std::to_string(n));
            continue;
        }
        u.a[n] = m.a[n] / L.lambda(n);
    }
    return u;
}

// Sets kernel modes to zero (quotient representative).
inline FourierField pin_kernel(const InertiaOperator& L, FourierField u) {
    for (int n = 0; n <= u.nmax(); ++n)
        if (L.in_kernel(n)) u.a[n] = 0;
    return u;
}

// <u, v>_L = 2 pi sum_n lambda_n Re(u_n conj v_n), n over all integers.
inline double inner(const InertiaOperator& L, const FourierField& u, const FourierField& v) {
    const int n = std::min(u.nmax(), v.nmax());
    double s = L.lambda(0) * (u.a[0] * std::conj(v.a[0])).real();
    for (int k = 1; k <= n; ++k) s += 2.0 * L.lambda(k) * (u.a[k] * std::conj(v.a[k])).real();
    return 2 * pi * s;
}

inline double energy(const InertiaOperator& L, const FourierField& u) { return inner(L, u, u); }

// ------------------------------------------------------------ EPDiff

struct EpdiffOptions {
    int grid_points = 0;     // pseudo-spectral grid, 0 picks the smallest power of two > 3 nmax
    double dispersion = 0;   // central-extension coefficient a in m_t = ... - a u_xxx
    bool track_flow = true;  // co-integrate phi_t = u o phi on the grid nodes
    double cfl = 0.25;       // dt <= cfl / (nmax max|u|)
    double tail_limit = 1e-3;
    int stride = 1;
};

struct EpdiffPath {
    std::vector<double> times;
    std::vector<FourierField> u;
    std::vector<Vec> phi;  // nodal phi(theta_j), empty when the flow is not tracked
    std::vector<double> energy;
    std::vector<double> tail;
};

// Energy fraction carried by the top third of the retained modes.
inline double tail_fraction(const InertiaOperator& L, const FourierField& u) {
    double tot = 0, top = 0;
    const int cut = (2 * u.nmax()) / 3;
    for (int n = 0; n <= u.nmax(); ++n) {
        double e = (n ? 2.0 : 1.0) * L.lambda(n) * std::norm(u.a[n]);
        tot += e;
        if (n > cut) top += e;
    }
    return tot > 0 ? top / tot : 0.0;
}

namespace detail {

struct EpdiffSystem {
    InertiaOperator L;
    int nmax, m;
    double disp;
    bool flow;

    Vec pack(const FourierField& u, const Vec& eta) const {
        Vec y(2 * (nmax + 1) + (flow ? m : 0));
        y.head(nmax + 1) = u.a.real();
        y.segment(nmax + 1, nmax + 1) = u.a.imag();
        if (flow) y.tail(m) = eta;
        return y;
    }
    FourierField field(const Vec& y) const {
        FourierField u(nmax);
        for (int n = 0; n <= nmax; ++n) u.a[n] = cd(y[n], y[nmax + 1 + n]);
        return u;
    }

    Vec rhs(const Vec& y) const {
        FourierField u = field(y);
        FourierField mom = apply_inertia(L, u);
        Vec un = u.nodal(m), ux = u.deriv().nodal(m), mn = mom.nodal(m), mx = mom.deriv().nodal(m);
        Vec r = -(un.cwiseProduct(mx) + 2.0 * ux.cwiseProduct(mn));
        FourierField mt = FourierField::from_nodal(r, nmax);
        if (disp != 0) mt = mt - disp * u.deriv(3);
        FourierField ut(nmax);
        for (int n = 0; n <= nmax; ++n)
            if (!L.in_kernel(n)) ut.a[n] = mt.a[n] / L.lambda(n);
        Vec eta_t;
        if (flow) {
            eta_t.resize(m);
            const double h = 2 * pi / m;
            for (int j = 0; j < m; ++j) eta_t[j] = u.eval(h * j + y[2 * (nmax + 1) + j]);
        }
        return pack(ut, eta_t);
    }
};

}  // namespace detail

// Integrates m_t = -(u m_theta + 2 u_theta m) (- a u_theta^3), m = L u, with the
// Galerkin-truncated pseudo-spectral scheme. Each grid interval is subdivided so
// that dt stays under the CFL bound. Throws ResolutionExceeded once the tail
// fraction passes opt.tail_limit.
inline EpdiffPath integrate_geodesic(const InertiaOperator& L, const FourierField& u0, const TimeGrid& grid,
                                     const EpdiffOptions& opt = {}) {
    const int nmax = u0.nmax();
    for (int n = 0; n <= nmax; ++n)
        if (L.in_kernel(n) && std::abs(u0.a[n]) > 1e-12)
            throw NotInRange("initial field has a component on kernel mode " + std::to_string(n));
    if (std::abs(u0.a[0].imag()) > 1e-14) throw DomainError("initial field is not real");
    const int m = opt.grid_points > 0 ? opt.grid_points : fft_size_above(3 * nmax + 1);
    if (m <= 3 * nmax) throw DomainError("pseudo-spectral grid must exceed 3 nmax");
    detail::EpdiffSystem sys{L, nmax, m, opt.dispersion, opt.track_flow};

    EpdiffPath out;
    Vec y = sys.pack(pin_kernel(L, u0), Vec::Zero(m));
    auto record = [&](double t) {
        FourierField u = sys.field(y);
        out.times.push_back(t);
        out.energy.push_back(energy(L, u));
        out.tail.push_back(tail_fraction(L, u));
        if (opt.track_flow) {
            Vec phi(m);
            for (int j = 0; j < m; ++j) phi[j] = 2 * pi * j / m + y[2 * (nmax + 1) + j];
            out.phi.push_back(phi);
        }
        out.u.push_back(std::move(u));
    };
    record(grid.t0);
    for (int i = 0; i < grid.steps; ++i) {
        const double t = grid.at(i), H = grid.at(i + 1) - t;
        const double umax = sys.field(y).nodal(m).cwiseAbs().maxCoeff();
        int sub = 1;
        if (umax > 0) sub = std::max(1, int(std::ceil(H * nmax * umax / opt.cfl)));
        const double h = H / sub;
        for (int k = 0; k < sub; ++k) {
            Vec k1 = sys.rhs(y);
            Vec k2 = sys.rhs(y + 0.5 * h * k1);
            Vec k3 = sys.rhs(y + 0.5 * h * k2);
            Vec k4 = sys.rhs(y + h * k3);
            y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!y.allFinite()) throw IntegrationDiverged(t + k * h);
        }
        double tail = tail_fraction(L, sys.field(y));
        if (tail > opt.tail_limit) throw ResolutionExceeded(grid.at(i + 1), tail);
        if ((i + 1) % opt.stride == 0 || i + 1 == grid.steps) record(grid.at(i + 1));
    }
    return out;
}

// Periodic part phi(theta) - theta as a trigonometric interpolant.
struct CircleMap {
    Vec nodes_eta;
    CVec F, Fd;  // FFT of eta and of eta'
    int n;

    explicit CircleMap(const Vec& phi) : n(int(phi.size())) {
        nodes_eta.resize(n);
        for (int j = 0; j < n; ++j) nodes_eta[j] = phi[j] - 2 * pi * j / n;
        F = spectral::fft(nodes_eta);
        Fd = spectral::fft(spectral::deriv(nodes_eta));
    }
    double operator()(double x) const { return x + spectral::interpolate(F, x); }
    double slope(double x) const { return 1.0 + spectral::interpolate(Fd, x); }
    Vec slope_nodal() const { return Vec::Ones(n) + spectral::deriv(nodes_eta); }

    double inverse(double x) const {
        double th = x;
        for (int it = 0; it < 60; ++it) {
            double d = ((*this)(th) - x) / slope(th);
            th -= d;
            if (std::abs(d) < 1e-15) break;
        }
        return th;
    }
};

// max over stored times of |(m(t) o phi) phi_theta^2 - m(0)|_inf / |m(0)|_inf.
inline double momentum_transport_residual(const InertiaOperator& L, const EpdiffPath& path) {
    if (path.phi.empty()) throw PreconditionError("path was integrated without the flow");
    FourierField m0 = apply_inertia(L, path.u.front());
    const int n = int(path.phi.front().size());
    Vec m0n(n);
    for (int j = 0; j < n; ++j) m0n[j] = m0.eval(2 * pi * j / n);
    const double scale = m0n.cwiseAbs().maxCoeff();
    if (scale == 0) return 0.0;
    double worst = 0;
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        FourierField mt = apply_inertia(L, path.u[i]);
        CircleMap phi(path.phi[i]);
        Vec sl = phi.slope_nodal();
        for (int j = 0; j < n; ++j) {
            double v = mt.eval(path.phi[i][j]) * sl[j] * sl[j];
            worst = std::max(worst, std::abs(v - m0n[j]));
        }
    }
    return worst / scale;
}

// ----------------------------------------------------- Arnold curvature

// ad_u v = -(u v' - v u').
inline FourierField ad(const FourierField& u, const FourierField& v) {
    return multiply(v, u.deriv()) - multiply(u, v.deriv());
}

// ad^T_u w = L^{-1}[u (Lw)' + 2 u' Lw], computed without truncation.
inline FourierField ad_transpose(const InertiaOperator& L, const FourierField& u, const FourierField& w) {
    FourierField lw = apply_inertia(L, w);
    FourierField r = multiply(u, lw.deriv()) + 2.0 * multiply(u.deriv(), lw);
    return invert_inertia(L, pin_kernel(L, r));
}

struct ArnoldResult {
    double value = 0;
    double orthonormality_deviation = 0;
    double tail = 0;  // relative L-norm of ad outputs beyond the evaluation band
    bool truncated() const { return tail > 1e-8; }
};

// Sectional curvature of the right-invariant metric for the plane span(u, v).
// The pair is Gram-Schmidt corrected when within 1e-3 of orthonormal.
// `band` caps the modes kept in intermediate results (0 keeps everything).
inline ArnoldResult arnold_sectional_curvature(const InertiaOperator& L, FourierField u, FourierField v, int band = 0) {
    u = pin_kernel(L, u);
    v = pin_kernel(L, v);
    double uu = inner(L, u, u), vv = inner(L, v, v), uv = inner(L, u, v);
    ArnoldResult r;
    r.orthonormality_deviation = std::max({std::abs(uu - 1), std::abs(vv - 1), std::abs(uv)});
    if (r.orthonormality_deviation > 1e-3)
        throw PreconditionError("pair is not orthonormal (deviation " + std::to_string(r.orthonormality_deviation) + ")");
    if (r.orthonormality_deviation > 1e-6) {
        u = (1.0 / std::sqrt(uu)) * u;
        v = v - inner(L, v, u) * u;
        v = (1.0 / std::sqrt(inner(L, v, v))) * v;
    }
    auto cap = [&](const FourierField& f) {
        if (band <= 0 || f.nmax() <= band) return f;
        FourierField kept = f.resized(band);
        double all = inner(L, f, f), lost = all - inner(L, kept, kept);
        if (all > 0) r.tail = std::max(r.tail, std::sqrt(std::max(lost, 0.0) / all));
        return kept;
    };
    FourierField a_uv = cap(ad(u, v));
    FourierField t_vu = cap(ad_transpose(L, v, u)), t_uv = cap(ad_transpose(L, u, v));
    FourierField t_uu = cap(ad_transpose(L, u, u)), t_vv = cap(ad_transpose(L, v, v));
    FourierField sum = t_vu + t_uv, diff = t_vu - t_uv;
    r.value = 0.25 * inner(L, sum, sum) - inner(L, t_uu, t_vv) - 0.75 * inner(L, a_uv, a_uv) +
              0.5 * inner(L, a_uv, diff);
    return r;
}

// int (u v' - v u')^2 dtheta by quadrature on a fine grid.
inline double l2_curvature_direct(const FourierField& u, const FourierField& v) {
    const int m = fft_size_above(4 * std::max(u.nmax(), v.nmax()) + 1);
    Vec w = u.nodal(m).cwiseProduct(v.deriv().nodal(m)) - v.nodal(m).cwiseProduct(u.deriv().nodal(m));
    return w.squaredNorm() * 2 * pi / m;
}

// ------------------------------------------------------- sphere check

struct SphereCheck {
    double constraint = 0;      // int phi_theta dtheta - 2 pi
    double isometry_ratio = 0;  // |d sqrt(phi_theta)[dphi]|^2 / int u_x^2, u = dphi o phi^{-1}
    double sphere_curvature = 0;  // 1 / int (sqrt phi_theta)^2 for the rescaled metric
};

// phi and dphi sampled at theta_j = 2 pi j / n; phi(theta) - theta periodic.
inline SphereCheck hs_sphere_check(const Vec& phi, const Vec& dphi) {
    const int n = int(phi.size());
    if (dphi.size() != n) throw DomainError("phi and its variation need the same grid");
    CircleMap map(phi);
    Vec sl = map.slope_nodal();
    if (sl.minCoeff() <= 0) throw DomainError("phi is not an orientation-preserving diffeomorphism");
    const double h = 2 * pi / n;
    SphereCheck r;
    r.constraint = sl.sum() * h - 2 * pi;
    Vec d = spectral::deriv(dphi).array() / (2.0 * sl.array().sqrt());
    const double lhs = d.squaredNorm() * h;
    CVec D = spectral::fft(dphi);
    Vec u(n);
    for (int j = 0; j < n; ++j) u[j] = spectral::interpolate(D, map.inverse(h * j));
    const double rhs = spectral::deriv(u).squaredNorm() * h;
    if (!(rhs > 0)) throw DomainError("variation has zero energy");
    r.isometry_ratio = lhs / rhs;
    r.sphere_curvature = 1.0 / (sl.sum() * h);
    return r;
}

// ------------------------------------------------------------ teichons

struct TeichonState {
    Vec q, p;
};

inline double teichon_hamiltonian(const TeichonState& s) {
    double H = 0;
    for (Eigen::Index i = 0; i < s.q.size(); ++i)
        for (Eigen::Index j = 0; j < s.q.size(); ++j) H += s.p[i] * s.p[j] * wp_green(s.q[i] - s.q[j]);
    return 0.5 * H;
}

inline double teichon_min_gap(const Vec& q) {
    if (q.size() < 2) return 2 * pi;
    double g = 2 * pi;
    for (Eigen::Index i = 0; i < q.size(); ++i)
        for (Eigen::Index j = i + 1; j < q.size(); ++j) g = std::min(g, std::abs(std::remainder(q[i] - q[j], 2 * pi)));
    return g;
}

struct TeichonPath {
    std::vector<double> times;
    std::vector<TeichonState> states;
};

inline TeichonPath teichon_evolve(const TeichonState& s0, const TimeGrid& grid, int stride = 1) {
    const Eigen::Index n = s0.q.size();
    if (s0.p.size() != n) throw DomainError("positions and momenta differ in length");
    if (teichon_min_gap(s0.q) < 1e-6) throw DomainError("teichon positions must be distinct");
    auto rhs = [n](double, const Vec& y) {
        Vec dy = Vec::Zero(2 * n);
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index j = 0; j < n; ++j) {
                double d = y[k] - y[j];
                dy[k] += y[n + j] * wp_green(d);
                dy[n + k] -= y[n + k] * y[n + j] * wp_green_prime(d);
            }
        return dy;
    };
    Vec y(2 * n);
    y << s0.q, s0.p;
    TeichonPath out;
    out.times.push_back(grid.t0);
    out.states.push_back(s0);
    const double h = grid.dt();
    for (int i = 0; i < grid.steps; ++i) {
        const double t = grid.at(i);
        Vec k1 = rhs(t, y), k2 = rhs(t, y + 0.5 * h * k1), k3 = rhs(t, y + 0.5 * h * k2), k4 = rhs(t, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite()) throw IntegrationDiverged(t);
        double gap = teichon_min_gap(y.head(n));
        if (gap < 1e-6) throw CollisionError(grid.at(i + 1), gap);
        if ((i + 1) % stride == 0 || i + 1 == grid.steps) {
            out.times.push_back(grid.at(i + 1));
            out.states.push_back({y.head(n), y.tail(n)});
        }
    }
    return out;
}

}  // namespace shapegeo::diff
