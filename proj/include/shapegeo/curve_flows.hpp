#pragma once
#include <algorithm>
#include <cmath>
#include <vector>

#include "curve_paths.hpp"
#include "curves.hpp"

namespace shapegeo::curves {

inline Vec pack_curve(const Curve& c) {
    Vec y(2 * c.rows());
    y << c.col(0), c.col(1);
    return y;
}

inline Curve unpack_curve(const Eigen::Ref<const Vec>& y, Eigen::Index n) {
    Curve c(n, 2);
    c.col(0) = y.head(n);
    c.col(1) = y.segment(n, n);
    return c;
}

struct HorizontalFlow {
    CurvePath path;
    std::vector<Vec> a;  // normal speed along the path
};

inline double turning_number(const ArcData& d) { return d.kappa.dot(d.ds) / (2 * pi); }

// Horizontal L2 geodesic c_t = a n with a_t = kappa a^2 / 2.
inline HorizontalFlow l2_horizontal_flow(const Curve& c0, const Vec& a0, const TimeGrid& grid, int stride = 1) {
    check_curve(c0);
    const Eigen::Index n = c0.rows();
    Vec y0(3 * n);
    y0 << pack_curve(c0), a0;
    const double turning0 = turning_number(arclength_data(c0));
    auto rhs = [&](double t, const Vec& y) {
        Curve c = unpack_curve(y, n);
        Vec a = y.tail(n);
        ArcData d = arclength_data(c);
        if (d.kappa.cwiseAbs().maxCoeff() > 1e6) throw FlowSingular("curvature above 1e6", t);
        // a step across a collapse shows up as a flipped orientation
        if (std::abs(turning_number(d) - turning0) > 0.5) throw FlowSingular("curve passed through a singularity", t);
        Vec out(3 * n);
        Mat ct = d.n.array().colwise() * a.array();
        out << ct.col(0), ct.col(1), (0.5 * d.kappa.array() * a.array().square()).matrix();
        return out;
    };
    auto sol = rk4_integrate(rhs, y0, grid, stride);
    HorizontalFlow f;
    for (std::size_t i = 0; i < sol.size(); ++i) {
        f.path.times.push_back(sol.times[i]);
        f.path.curves.push_back(unpack_curve(sol.states[i], n));
        f.a.push_back(sol.states[i].tail(n));
    }
    return f;
}

enum class GradientMetric { L2, H1Scale };

struct FlowEnergy {
    enum class Kind { Length, Centroid } kind = Kind::Length;
    Eigen::Vector2d w = Eigen::Vector2d::Zero();

    static FlowEnergy length() { return {}; }
    static FlowEnergy centroid(Eigen::Vector2d w) { return {Kind::Centroid, w}; }

    double value(const Curve& c) const {
        ArcData a = arclength_data(c);
        if (kind == Kind::Length) return a.length;
        return 0.5 * (centroid_of(c, a) - w).squaredNorm();
    }
    static Eigen::Vector2d centroid_of(const Curve& c, const ArcData& a) { return curves::centroid(c, a); }

    // L2 gradient field: dE(h) = sum <grad, h> ds.
    Mat l2_gradient(const Curve& c, const ArcData& a) const {
        if (kind == Kind::Length) return -(a.n.array().colwise() * a.kappa.array()).matrix();
        Eigen::Vector2d mu = centroid_of(c, a), dm = mu - w;
        Mat muc = (-c).rowwise() + mu.transpose();  // mu - c
        Vec coef = (a.n * dm + a.kappa.cwiseProduct(muc * dm)) / a.length;
        return a.n.array().colwise() * coef.array();
    }
};

inline Mat spectral_diff_matrix(Eigen::Index n) {
    Mat D(n, n);
    for (Eigen::Index j = 0; j < n; ++j) D.col(j) = spectral::deriv(Vec::Unit(n, j), 1);
    return D;
}

// Gradient of E for the metric G1(h,k) = int (1/l) <h,k> + l <D_s h, D_s k> ds:
// solves M g = diag(ds) grad0 with M = diag(ds)/l + l D^T diag(dtheta / speed) D.
inline Mat h1_gradient(const Mat& grad0, const ArcData& a, const Mat& D) {
    const Eigen::Index n = grad0.rows();
    const double dth = dtheta(n);
    Mat M = D.transpose() * (dth * a.speed.cwiseInverse()).asDiagonal() * D * a.length;
    M.diagonal() += a.ds / a.length;
    Eigen::LLT<Mat> llt(M);
    Mat rhs = grad0.array().colwise() * a.ds.array();
    return llt.solve(rhs);
}

struct FlowOptions {
    bool adaptive = false;
    int stride = 1;
    AdaptiveOptions adaptive_opts{};
    bool dealias = true;  // filter aliased high modes out of the velocity
};

struct FlowResult {
    CurvePath path;
    std::vector<double> energy;
};

inline Mat flow_velocity(GradientMetric gm, const FlowEnergy& E, const Curve& c, const Mat* D, double t) {
    ArcData a = arclength_data(c);
    if (a.kappa.cwiseAbs().maxCoeff() > 1e6) throw FlowSingular("curvature above 1e6", t);
    Mat g = E.l2_gradient(c, a);
    if (gm == GradientMetric::H1Scale) g = h1_gradient(g, a, *D);
    return -g;
}

inline FlowResult gradient_flow(GradientMetric gm, const FlowEnergy& E, const Curve& c0, const TimeGrid& grid,
                                const FlowOptions& opt = {}) {
    check_curve(c0);
    const Eigen::Index n = c0.rows();
    Mat D;
    if (gm == GradientMetric::H1Scale) D = spectral_diff_matrix(n);
    auto rhs = [&](double t, const Vec& y) {
        Mat v = flow_velocity(gm, E, unpack_curve(y, n), &D, t);
        if (opt.dealias)
            for (int c = 0; c < 2; ++c) v.col(c) = spectral::dealias(v.col(c));
        return pack_curve(v);
    };
    ODESolution sol = opt.adaptive ? dopri45_integrate(rhs, pack_curve(c0), grid, opt.adaptive_opts)
                                   : rk4_integrate(rhs, pack_curve(c0), grid, opt.stride);
    FlowResult r;
    for (std::size_t i = 0; i < sol.size(); ++i) {
        Curve c = unpack_curve(sol.states[i], n);
        r.path.times.push_back(sol.times[i]);
        r.energy.push_back(E.value(c));
        r.path.curves.push_back(std::move(c));
    }
    return r;
}

// ----------------------------------------------------------------- zigzag

struct ZigzagOptions {
    int nodes_per_tooth = 64;
    double smoothing = 0.005;  // rounds the tooth tips so every intermediate is smooth
    int steps_per_phase = 150;
};

namespace detail {

// Radial function of a star-shaped curve about `center`, linearly interpolated in angle.
struct Radial {
    std::vector<double> ang, rad;
    double operator()(double a) const {
        const double tp = 2 * pi;
        a = std::fmod(std::fmod(a, tp) + tp, tp);
        auto it = std::upper_bound(ang.begin(), ang.end(), a);
        std::size_t hi = it - ang.begin();
        std::size_t lo = hi == 0 ? ang.size() - 1 : hi - 1;
        if (hi == ang.size()) hi = 0;
        double a0 = ang[lo], a1 = ang[hi];
        double span = a1 - a0;
        if (span <= 0) span += tp;
        double off = a - a0;
        if (off < 0) off += tp;
        double w = off / span;
        return (1 - w) * rad[lo] + w * rad[hi];
    }
};

inline Radial radial_function(const Curve& c, const Eigen::Vector2d& center) {
    const Eigen::Index n = c.rows();
    std::vector<double> ang(n), rad(n);
    double prev = 0, total = 0;
    for (Eigen::Index j = 0; j <= n; ++j) {
        Eigen::Index i = j % n;
        double a = std::atan2(c(i, 1) - center[1], c(i, 0) - center[0]);
        if (j > 0) {
            double d = std::remainder(a - prev, 2 * pi);
            if (!(d > 0)) throw DomainError("zigzag construction needs counter-clockwise curves star-shaped about the first centroid");
            total += d;
        }
        prev = a;
        if (j < n) {
            ang[i] = std::fmod(a + 2 * pi, 2 * pi);
            rad[i] = (c.row(i).transpose() - center).norm();
        }
    }
    if (std::abs(total - 2 * pi) > 1e-9) throw DomainError("curve winds more than once around the centroid");
    std::vector<std::size_t> idx(n);
    for (Eigen::Index i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return ang[x] < ang[y]; });
    Radial r;
    for (auto i : idx) {
        r.ang.push_back(ang[i]);
        r.rad.push_back(rad[i]);
    }
    return r;
}

}  // namespace detail

// Path between star-shaped curves c0, c1 through sawtooth intermediates with the
// given number of teeth. First the teeth grow from c0 until their tips reach c1,
// then the valleys rise until the curve is c1. Time nodes cluster quadratically
// at both ends where the teeth are flat.
inline CurvePath zigzag_short_path(const Curve& c0, const Curve& c1, int teeth, const ZigzagOptions& opt = {}) {
    check_curve(c0);
    check_curve(c1);
    if (teeth < 1) throw DomainError("zigzag needs at least one tooth");
    ArcData a0 = arclength_data(c0);
    Eigen::Vector2d center = centroid(c0, a0);
    auto r0 = detail::radial_function(c0, center), r1 = detail::radial_function(c1, center);
    const int n = opt.nodes_per_tooth * teeth;
    Vec alpha(n), f0(n), df(n), tri(n);
    for (int j = 0; j < n; ++j) {
        alpha[j] = dtheta(n) * j;
        f0[j] = r0(alpha[j]);
        df[j] = r1(alpha[j]) - f0[j];
        tri[j] = 0.5 + std::asin((1 - opt.smoothing) * std::sin(teeth * alpha[j] - 0.5 * pi)) / pi;
    }
    tri = (tri.array() - tri.minCoeff()) / (tri.maxCoeff() - tri.minCoeff());
    auto curve_at = [&](double t) {
        Vec f = t <= 0.5 ? Vec(f0.array() + 2 * t * df.array() * tri.array())
                         : Vec(f0.array() + df.array() * (tri.array() + (2 * t - 1) * (1 - tri.array())));
        Curve c(n, 2);
        c.col(0) = center[0] + f.array() * alpha.array().cos();
        c.col(1) = center[1] + f.array() * alpha.array().sin();
        return c;
    };
    CurvePath p;
    const int m = opt.steps_per_phase;
    for (int i = 0; i <= m; ++i) {
        double tau = double(i) / m;
        p.times.push_back(0.5 * tau * tau);
    }
    for (int i = m - 1; i >= 0; --i) {
        double tau = double(i) / m;
        p.times.push_back(1.0 - 0.5 * tau * tau);
    }
    for (double t : p.times) p.curves.push_back(curve_at(t));
    return p;
}

inline double enclosed_area(const Curve& c) {
    Mat d1 = deriv(c, 1);
    return 0.5 * (c.col(0).cwiseProduct(d1.col(1)) - c.col(1).cwiseProduct(d1.col(0))).sum() * dtheta(c.rows());
}

// Lower bound for the GA length (A > 0) of any path sweeping out `area`, from the
// swept-area estimate together with the Lipschitz bound on sqrt(length), taken
// from whichever endpoint length l gives the larger value.
inline double ga_swept_area_bound(double A, double l0, double l1, double area) {
    auto b = [&](double l) { return 2 * std::sqrt(A) * (std::sqrt(l + area / std::sqrt(A)) - std::sqrt(l)); };
    return std::max(b(l0), b(l1));
}

}  // namespace shapegeo::curves
