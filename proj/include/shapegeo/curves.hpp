#pragma once
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "numerics.hpp"
#include "spectral.hpp"

namespace shapegeo::curves {

// N x 2 samples at theta_j = 2 pi j / N.
using Curve = Mat;

enum class Deriv { Spectral, CentralDiff };

inline constexpr double pi = std::numbers::pi;

inline double dtheta(Eigen::Index n) { return 2 * pi / double(n); }

inline Mat deriv(const Mat& c, int order = 1, Deriv mode = Deriv::Spectral) {
    if (mode == Deriv::Spectral) return spectral::deriv_cols(c, order);
    Mat out(c.rows(), c.cols());
    for (Eigen::Index j = 0; j < c.cols(); ++j) out.col(j) = spectral::deriv_fd(c.col(j), order);
    return out;
}

// Rotation by +pi/2.
inline Mat J(const Mat& a) {
    Mat out(a.rows(), 2);
    out.col(0) = -a.col(1);
    out.col(1) = a.col(0);
    return out;
}

inline Vec rowdot(const Mat& a, const Mat& b) { return (a.array() * b.array()).rowwise().sum(); }

inline Curve circle(int n, double r = 1.0, double cx = 0.0, double cy = 0.0, double phase = 0.0) {
    Curve c(n, 2);
    for (int j = 0; j < n; ++j) {
        double t = dtheta(n) * j + phase;
        c(j, 0) = cx + r * std::cos(t);
        c(j, 1) = cy + r * std::sin(t);
    }
    return c;
}

inline Curve ellipse(int n, double a, double b, double cx = 0.0, double cy = 0.0, double rot = 0.0) {
    Curve c(n, 2);
    for (int j = 0; j < n; ++j) {
        double t = dtheta(n) * j, x = a * std::cos(t), y = b * std::sin(t);
        c(j, 0) = cx + std::cos(rot) * x - std::sin(rot) * y;
        c(j, 1) = cy + std::sin(rot) * x + std::cos(rot) * y;
    }
    return c;
}

inline void check_curve(const Curve& c) {
    if (c.cols() != 2) throw DomainError("plane curves need two columns");
    if (c.rows() < 8 || c.rows() % 2) throw DomainError("curves need an even number N >= 8 of samples");
    if (!c.allFinite()) throw ImmersionViolated("curve has non-finite samples");
}

struct ArcData {
    Vec speed;   // |c_theta|
    Vec ds;      // speed * dtheta
    Mat v, n;    // unit tangent, n = J v
    Vec kappa;   // <D_s v, n>
    double length = 0.0;
};

inline ArcData arclength_data(const Curve& c, Deriv mode = Deriv::Spectral) {
    check_curve(c);
    ArcData a;
    Mat d1 = deriv(c, 1, mode), d2 = deriv(c, 2, mode);
    a.speed = d1.rowwise().norm();
    if (a.speed.minCoeff() < 1e-10) throw ImmersionViolated("speed below 1e-10");
    a.ds = a.speed * dtheta(c.rows());
    a.v = d1.array().colwise() / a.speed.array();
    a.n = J(a.v);
    Vec cross = d1.col(0).array() * d2.col(1).array() - d1.col(1).array() * d2.col(0).array();
    a.kappa = cross.array() / a.speed.array().cube();
    a.length = a.ds.sum();
    return a;
}

// D_s f for nodal data (columns differentiated independently).
inline Mat arc_deriv(const Mat& f, const Vec& speed) {
    return deriv(f, 1).array().colwise() / speed.array();
}

inline Vec arc_deriv(const Vec& f, const Vec& speed) {
    return spectral::deriv(f).array() / speed.array();
}

// Same curve sampled at equal arclength steps starting from c(0), found by Newton
// on the trigonometric interpolant of the arclength function.
inline Curve constant_speed(const Curve& c, int newton_steps = 30) {
    ArcData a = arclength_data(c);
    const Eigen::Index n = c.rows();
    const double mean = a.length / (2 * pi);
    Vec S = spectral::antideriv(a.speed);
    Vec per = S.head(n) - mean * Vec::LinSpaced(n, 0, dtheta(n) * (n - 1));  // periodic part
    spectral::CVec P = spectral::fft(per), Sp = spectral::fft(a.speed);
    spectral::CVec X = spectral::fft(c.col(0)), Y = spectral::fft(c.col(1));
    Curve out(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double target = mean * dtheta(n) * i;
        double th = dtheta(n) * i;
        for (int it = 0; it < newton_steps; ++it) {
            double r = mean * th + spectral::interpolate(P, th) - target;
            double step = r / std::max(spectral::interpolate(Sp, th), 1e-12);
            th -= step;
            if (std::abs(step) < 1e-15) break;
        }
        out(i, 0) = spectral::interpolate(X, th);
        out(i, 1) = spectral::interpolate(Y, th);
    }
    return out;
}

inline Vec centroid(const Curve& c, const ArcData& a) {
    return (c.transpose() * a.ds) / a.length;
}

// ---------------------------------------------------------------- metrics

struct CurveMetric {
    enum class Kind { L2, GA, Conformal, Elastic, H1Scale };
    Kind kind = Kind::L2;
    double A = 0.0;          // GA curvature weight
    double a = 1.0, b = 0.5; // elastic normal / tangential coefficients
    std::function<double(double)> phi, dphi;  // conformal factor of the length and its derivative

    static CurveMetric L2() { return {}; }
    static CurveMetric GA(double A) {
        if (A < 0) throw DomainError("GA weight must be non-negative");
        CurveMetric m;
        m.kind = Kind::GA;
        m.A = A;
        return m;
    }
    static CurveMetric Conformal(std::function<double(double)> phi, std::function<double(double)> dphi) {
        CurveMetric m;
        m.kind = Kind::Conformal;
        m.phi = std::move(phi);
        m.dphi = std::move(dphi);
        return m;
    }
    static CurveMetric Elastic(double a, double b) {
        if (!(a > 0 && b > 0)) throw DomainError("elastic coefficients must be positive");
        CurveMetric m;
        m.kind = Kind::Elastic;
        m.a = a;
        m.b = b;
        return m;
    }
    static CurveMetric H1Scale() {
        CurveMetric m;
        m.kind = Kind::H1Scale;
        return m;
    }

    // True for metrics weighting <h, k> pointwise, where horizontal means normal.
    bool is_local() const { return kind == Kind::L2 || kind == Kind::GA || kind == Kind::Conformal; }

    std::string name() const {
        switch (kind) {
            case Kind::L2: return "l2";
            case Kind::GA: return "ga";
            case Kind::Conformal: return "conformal";
            case Kind::Elastic: return "elastic";
            default: return "h1scale";
        }
    }
};

// Pointwise weight of a local metric at c.
inline Vec local_weight(const CurveMetric& m, const ArcData& a) {
    switch (m.kind) {
        case CurveMetric::Kind::GA: return (1.0 + m.A * a.kappa.array().square()).matrix();
        case CurveMetric::Kind::Conformal: return Vec::Constant(a.ds.size(), m.phi(a.length));
        default: return Vec::Ones(a.ds.size());
    }
}

inline double metric_inner(const CurveMetric& m, const Curve& c, const Mat& h, const Mat& k) {
    if (h.rows() != c.rows() || k.rows() != c.rows()) throw DomainError("tangent shape mismatch");
    ArcData a = arclength_data(c);
    if (m.is_local()) return (local_weight(m, a).array() * rowdot(h, k).array() * a.ds.array()).sum();
    Mat dh = arc_deriv(h, a.speed), dk = arc_deriv(k, a.speed);
    if (m.kind == CurveMetric::Kind::Elastic) {
        Vec nn = rowdot(dh, a.n).array() * rowdot(dk, a.n).array();
        Vec vv = rowdot(dh, a.v).array() * rowdot(dk, a.v).array();
        return ((m.a * m.a * nn + m.b * m.b * vv).array() * a.ds.array()).sum();
    }
    // H1Scale
    return ((rowdot(h, k) / a.length + a.length * rowdot(dh, dk)).array() * a.ds.array()).sum();
}

// ---------------------------------------------------------------- SRVT

inline Mat srvt(const Curve& c) {
    Mat d1 = deriv(c, 1);
    Vec sp = d1.rowwise().norm();
    if (sp.minCoeff() < 1e-10) throw ImmersionViolated("speed below 1e-10");
    return d1.array().colwise() / sp.array().sqrt();
}

// Open curve through the origin, N + 1 samples (the last one at theta = 2 pi).
inline Mat srvt_inverse(const Mat& e) {
    Vec r = e.rowwise().norm();
    Mat ee = e.array().colwise() * r.array();
    Mat out(e.rows() + 1, 2);
    out.col(0) = spectral::antideriv(ee.col(0));
    out.col(1) = spectral::antideriv(ee.col(1));
    return out;
}

inline Eigen::Vector2d closure_defect(const Mat& e) {
    Vec r = e.rowwise().norm();
    Mat ee = e.array().colwise() * r.array();
    return ee.colwise().sum().transpose() * dtheta(e.rows());
}

struct PullbackPair {
    double elastic = 0.0, flat = 0.0;
};

inline PullbackPair srvt_pullback_check(const Curve& c, const Mat& h, const Mat& k, double eps = 1e-5) {
    Mat dqh = (srvt(c + eps * h) - srvt(c - eps * h)) / (2 * eps);
    Mat dqk = (srvt(c + eps * k) - srvt(c - eps * k)) / (2 * eps);
    PullbackPair p;
    p.elastic = metric_inner(CurveMetric::Elastic(1.0, 0.5), c, h, k);
    p.flat = rowdot(dqh, dqk).sum() * dtheta(c.rows());
    return p;
}

// Projects e onto the closed-curve constraint with a few minimum-norm Newton steps.
inline Mat project_closure(Mat e, int steps = 2, double tol = 1e-13) {
    const double dth = dtheta(e.rows());
    for (int it = 0; it < steps; ++it) {
        Eigen::Vector2d F = closure_defect(e);
        if (F.norm() < tol) break;
        // d(|e| e) = |e| de + e <e, de> / |e|
        const Eigen::Index n = e.rows();
        Mat Jac(2, 2 * n);
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::Vector2d x = e.row(j).transpose();
            double r = std::max(x.norm(), 1e-300);
            Eigen::Matrix2d B = r * Eigen::Matrix2d::Identity() + x * x.transpose() / r;
            Jac.block(0, 2 * j, 2, 2) = B * dth;
        }
        Eigen::Vector2d lam = (Jac * Jac.transpose()).ldlt().solve(F);
        Vec de = Jac.transpose() * lam;
        for (Eigen::Index j = 0; j < n; ++j) e.row(j) -= de.segment(2 * j, 2).transpose();
    }
    return e;
}

// ------------------------------------------------------ curvature formulas

struct OrthoCheck {
    Mat a, b;  // possibly Gram-Schmidt corrected
    double deviation = 0.0;
};

// Accepts pairs orthonormal to 1e-6, corrects them when within 1e-3, rejects otherwise.
template <class Inner>
OrthoCheck orthonormalize(const Mat& a, const Mat& b, Inner&& inner) {
    double aa = inner(a, a), bb = inner(b, b), ab = inner(a, b);
    OrthoCheck r{a, b, std::max({std::abs(aa - 1), std::abs(bb - 1), std::abs(ab)})};
    if (r.deviation <= 1e-6) return r;
    if (r.deviation > 1e-3) throw PreconditionError("pair is not orthonormal (deviation " +
                                                    std::to_string(r.deviation) + ")");
    r.a = a / std::sqrt(aa);
    Mat bp = b - inner(b, r.a) * r.a;
    r.b = bp / std::sqrt(inner(bp, bp));
    return r;
}

// 1/2 int (a D_s b - b D_s a)^2 ds, without any orthonormality requirement.
inline double l2_curvature_form(const Curve& c, const Vec& a, const Vec& b) {
    ArcData d = arclength_data(c);
    Vec w = a.array() * arc_deriv(b, d.speed).array() - b.array() * arc_deriv(a, d.speed).array();
    return 0.5 * (w.array().square() * d.ds.array()).sum();
}

// Sectional curvature of the L2 metric for the plane spanned by a n, b n.
inline double l2_sectional_curvature(const Curve& c, const Vec& a, const Vec& b) {
    ArcData d = arclength_data(c);
    auto inner = [&](const Mat& x, const Mat& y) { return (x.array() * y.array() * d.ds.array()).sum(); };
    OrthoCheck o = orthonormalize(Mat(a), Mat(b), inner);
    return l2_curvature_form(c, o.a.col(0), o.b.col(0));
}

// The two GA curvature integrals evaluated for given a, b.
inline double ga_curvature_form(const Curve& c, const Vec& fa, const Vec& fb, double A) {
    ArcData d = arclength_data(c);
    auto Ds = [&](const Vec& f) { return arc_deriv(f, d.speed); };
    Vec da = Ds(fa), db = Ds(fb), dda = Ds(da), ddb = Ds(db);
    Vec dk = Ds(d.kappa), ddk = Ds(dk);
    Vec w2 = fa.array() * ddb.array() - fb.array() * dda.array();
    Vec w1 = fa.array() * db.array() - fb.array() * da.array();
    Eigen::ArrayXd k = d.kappa.array();
    Eigen::ArrayXd coef = ((1 - A * k.square()).square() - 4 * A * A * k * ddk.array() +
                           8 * A * A * dk.array().square()) /
                          (2 * (1 + A * k.square()));
    return (-A * w2.array().square() * d.ds.array()).sum() + (coef * w1.array().square() * d.ds.array()).sum();
}

inline double ga_sectional_curvature(const Curve& c, const Vec& a, const Vec& b, double A) {
    ArcData d = arclength_data(c);
    Vec psi = 1.0 + A * d.kappa.array().square();
    auto inner = [&](const Mat& x, const Mat& y) {
        return (psi.array() * x.array() * y.array() * d.ds.array()).sum();
    };
    OrthoCheck o = orthonormalize(Mat(a), Mat(b), inner);
    return ga_curvature_form(c, o.a.col(0), o.b.col(0), A);
}

// ------------------------------------------------------ conserved momenta

struct Momenta {
    double reparam = 0.0;
    Eigen::Vector2d linear = Eigen::Vector2d::Zero();
    double angular = 0.0;
    double scaling = 0.0;
};

// Noether quantities of a reparametrization, translation, rotation and scaling
// invariant weighted L2 metric; psi is the nodal weight and mu the test
// function for the reparametrization momentum.
inline Momenta conserved_momenta(const Vec& psi, const Curve& c, const Mat& ct, const Vec& mu) {
    ArcData a = arclength_data(c);
    Vec w = psi.array() * a.ds.array();
    Momenta m;
    m.reparam = (rowdot(deriv(c, 1), ct).array() * mu.array() * w.array()).sum();
    m.linear = ct.transpose() * w;
    m.angular = (rowdot(J(c), ct).array() * w.array()).sum();
    m.scaling = (rowdot(c, ct).array() * w.array()).sum();
    return m;
}

}  // namespace shapegeo::curves
