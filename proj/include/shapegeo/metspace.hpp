#pragma once
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "numerics.hpp"

namespace shapegeo::met {

// Metric field sampled at P base points with volume weights w_x of the
// background metric gtilde.
struct SPDMatrixField {
    Vec weights;
    std::vector<Mat> gtilde;
    std::vector<Mat> values;

    int points() const { return int(values.size()); }
    int dim() const { return values.empty() ? 0 : int(values.front().rows()); }

    SPDMatrixField with_values(std::vector<Mat> v) const { return {weights, gtilde, std::move(v)}; }
};

struct SymTangentField {
    std::vector<Mat> values;
};

inline void check_field(const SPDMatrixField& g) {
    if (g.weights.size() != g.points() || int(g.gtilde.size()) != g.points())
        throw DomainError("weights, background metric and values must have one entry per point");
    for (int i = 0; i < g.points(); ++i) {
        if (!(g.weights[i] > 0)) throw DomainError("volume weights must be positive");
        if (g.values[i].rows() != g.dim() || g.values[i].cols() != g.dim()) throw DomainError("mixed matrix sizes");
        Eigen::SelfAdjointEigenSolver<Mat> es(g.values[i]);
        if (es.eigenvalues().minCoeff() <= 0) throw DomainError("metric value is not positive definite");
    }
}

inline void check_tangent(const SPDMatrixField& g, const SymTangentField& h) {
    if (int(h.values.size()) != g.points()) throw DomainError("tangent field lives on a different base");
    for (auto& v : h.values)
        if (v.rows() != g.dim() || v.cols() != g.dim()) throw DomainError("tangent matrix size mismatch");
}

// sqrt(det(gtilde^{-1} g)): density of vol(g) against vol(gtilde).
inline double density(const Mat& g, const Mat& gt) { return std::sqrt(g.determinant() / gt.determinant()); }

// gamma_{x,g}(h, k) = Tr(g^{-1} h g^{-1} k) sqrt(det(gtilde^{-1} g)).
inline double point_inner(const Mat& g, const Mat& gt, const Mat& h, const Mat& k) {
    Eigen::LLT<Mat> llt(g);
    Mat H = llt.solve(h), K = llt.solve(k);
    return (H * K).trace() * density(g, gt);
}

inline double ebin_inner(const SPDMatrixField& g, const SymTangentField& h, const SymTangentField& k) {
    check_tangent(g, h);
    check_tangent(g, k);
    double s = 0;
    for (int i = 0; i < g.points(); ++i) s += g.weights[i] * point_inner(g.values[i], g.gtilde[i], h.values[i], k.values[i]);
    return s;
}

inline double volume(const SPDMatrixField& g, const std::vector<bool>& mask = {}) {
    double v = 0;
    for (int i = 0; i < g.points(); ++i)
        if (mask.empty() || mask[i]) v += g.weights[i] * density(g.values[i], g.gtilde[i]);
    return v;
}

// ------------------------------------------------------------ geodesics

// g_tt = 1/4 Tr(g^-1 g_t g^-1 g_t) g + g_t g^-1 g_t - 1/2 Tr(g^-1 g_t) g_t
inline Mat geodesic_acceleration(const Mat& g, const Mat& gt) {
    Eigen::LLT<Mat> llt(g);
    Mat A = llt.solve(gt);  // g^-1 g_t
    return 0.25 * (A * A).trace() * g + gt * A - 0.5 * A.trace() * gt;
}

struct FieldPath {
    std::vector<double> times;
    std::vector<SPDMatrixField> fields;
};

inline FieldPath geodesic_ode(const SPDMatrixField& g0, const SymTangentField& h0, const TimeGrid& grid, int stride = 1) {
    check_field(g0);
    check_tangent(g0, h0);
    const int P = g0.points(), m = g0.dim(), mm = m * m;
    auto pack = [&](const std::vector<Mat>& g, const std::vector<Mat>& v) {
        Vec y(2 * P * mm);
        for (int i = 0; i < P; ++i) {
            y.segment(2 * i * mm, mm) = g[i].reshaped();
            y.segment((2 * i + 1) * mm, mm) = v[i].reshaped();
        }
        return y;
    };
    auto metric_at = [&](const Vec& y, int i) { return Mat(y.segment(2 * i * mm, mm).reshaped(m, m)); };
    auto rhs = [&](double, const Vec& y) {
        Vec dy(y.size());
        for (int i = 0; i < P; ++i) {
            Mat g = metric_at(y, i);
            Mat v = y.segment((2 * i + 1) * mm, mm).reshaped(m, m);
            dy.segment(2 * i * mm, mm) = v.reshaped();
            dy.segment((2 * i + 1) * mm, mm) = symmetrize(geodesic_acceleration(symmetrize(g), symmetrize(v))).reshaped();
        }
        return dy;
    };
    Vec y = pack(g0.values, h0.values);
    // the speed is constant along geodesics; a step across a collapse of g shows up as a jump in it
    auto speeds = [&](const Vec& s) {
        Vec e(P);
        for (int i = 0; i < P; ++i) {
            Mat v = s.segment((2 * i + 1) * mm, mm).reshaped(m, m);
            e[i] = point_inner(symmetrize(metric_at(s, i)), g0.gtilde[i], v, v);
        }
        return e;
    };
    const Vec e0 = speeds(y);
    FieldPath out;
    auto record = [&](double t) {
        std::vector<Mat> v(P);
        for (int i = 0; i < P; ++i) v[i] = symmetrize(metric_at(y, i));
        out.times.push_back(t);
        out.fields.push_back(g0.with_values(std::move(v)));
    };
    record(grid.t0);
    const double h = grid.dt();
    for (int s = 0; s < grid.steps; ++s) {
        const double t = grid.at(s);
        Vec k1 = rhs(t, y), k2 = rhs(t, y + 0.5 * h * k1), k3 = rhs(t, y + 0.5 * h * k2), k4 = rhs(t, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        for (int i = 0; i < P; ++i) {
            Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(metric_at(y, i)));
            if (!y.allFinite() || es.eigenvalues().minCoeff() < 1e-12) throw LeftDomain(grid.at(s + 1));
        }
        Vec e = speeds(y);
        for (int i = 0; i < P; ++i)
            if (std::abs(e[i] - e0[i]) > 1e-3 * e0[i]) throw LeftDomain(grid.at(s + 1));
        if ((s + 1) % stride == 0 || s + 1 == grid.steps) record(grid.at(s + 1));
    }
    return out;
}

// Coefficients of g(t) = g0 exp(a Id + b H0) at one point, from Tr H and Tr H0^2.
struct GeodesicCoeffs {
    double a, b;
};

// Returns false when 1 + t Tr(H)/4 <= 0 on a pure-trace point (outside the domain).
inline bool geodesic_coeffs(int m, double trH, double q, double t, GeodesicCoeffs& c) {
    const double re = 1 + 0.25 * t * trH;
    const double im = 0.25 * std::sqrt(m * q) * t;
    if (q <= 1e-30 * (1 + trH * trH)) {
        if (!(re > 0)) return false;
        c.a = (4.0 / m) * std::log(re);
        c.b = t / re;
        return true;
    }
    // continuous argument of re + i im, so arctan picks (pi/2, pi) once re < 0
    c.a = (2.0 / m) * std::log(re * re + im * im);
    c.b = 4.0 / std::sqrt(m * q) * std::atan2(im, re);
    return true;
}

// Symmetric representative S = g0^{-1/2} h g0^{-1/2} of H = g0^{-1} h.
inline Mat symmetric_h(const Mat& g0, const Mat& h) {
    Mat r = sym_invsqrt(g0);
    return symmetrize(r * h * r);
}

inline Mat point_geodesic(const Mat& g0, const Mat& h0, double t) {
    if (h0.isZero(0.0)) return g0;  // exactly at rest, without sqrt/exp roundoff
    const int m = int(g0.rows());
    Mat S = symmetric_h(g0, h0);
    const double tr = S.trace();
    Mat S0 = S - (tr / m) * Mat::Identity(m, m);
    const double q = (S0 * S0).trace();
    GeodesicCoeffs c;
    if (!geodesic_coeffs(m, tr, q, t, c))
        throw DomainError("geodesic undefined at t=" + std::to_string(t) + " (t^h = " + std::to_string(tr) + ", limit " +
                          std::to_string(-4 / tr) + ")");
    Mat r = sym_sqrt(g0);
    return symmetrize(r * sym_exp(c.a * Mat::Identity(m, m) + c.b * S0) * r);
}

// Infimum of Tr(H) over points where H0 = 0, or +inf if there are none.
inline double trace_bound(const SPDMatrixField& g0, const SymTangentField& h0) {
    double th = INFINITY;
    const int m = g0.dim();
    for (int i = 0; i < g0.points(); ++i) {
        Mat S = symmetric_h(g0.values[i], h0.values[i]);
        const double tr = S.trace();
        Mat S0 = S - (tr / m) * Mat::Identity(m, m);
        if ((S0 * S0).trace() <= 1e-30 * (1 + tr * tr)) th = std::min(th, tr);
    }
    return th;
}

inline SPDMatrixField geodesic_explicit(const SPDMatrixField& g0, const SymTangentField& h0, double t) {
    check_field(g0);
    check_tangent(g0, h0);
    const double th = trace_bound(g0, h0);
    if (th < 0 && t >= -4 / th)
        throw DomainError("geodesic is only defined for t < " + std::to_string(-4 / th) + " (t^h = " + std::to_string(th) + ")");
    std::vector<Mat> v(g0.points());
    for (int i = 0; i < g0.points(); ++i) v[i] = point_geodesic(g0.values[i], h0.values[i], t);
    return g0.with_values(std::move(v));
}

// Initial velocity h with point_geodesic(g0, h, 1) = g1. With L = log(g0^{-1/2} g1 g0^{-1/2})
// = a Id + b S0 one has |z|^2 = e^{m a / 2} and arg z = |b S0| sqrt(m) / 4 for
// z = (1 + Tr S / 4) + i sqrt(m Tr S0^2) / 4; the endpoint is reachable iff arg z < pi.
inline Mat point_log(const Mat& g0, const Mat& g1) {
    const int m = int(g0.rows());
    Mat r = sym_sqrt(g0), ri = sym_invsqrt(g0);
    Mat L = sym_log(symmetrize(ri * g1 * ri));
    const double a = L.trace() / m;
    Mat L0 = L - a * Mat::Identity(m, m);
    const double rho = L0.norm();
    const double theta = rho * std::sqrt(double(m)) / 4;
    if (theta >= std::numbers::pi) throw NoLog("endpoint lies outside the image of the exponential map");
    const double mod = std::exp(m * a / 4);
    const double x = mod * std::cos(theta), y = mod * std::sin(theta);
    const double tr = 4 * (x - 1);
    Mat S = (tr / m) * Mat::Identity(m, m);
    if (rho > 0) S += L0 * (4 * y / std::sqrt(double(m)) / rho);
    return symmetrize(r * S * r);
}

inline SymTangentField log_map(const SPDMatrixField& g0, const SPDMatrixField& g1) {
    check_field(g0);
    check_field(g1);
    if (g0.points() != g1.points() || g0.dim() != g1.dim()) throw DomainError("fields live on different bases");
    SymTangentField h;
    h.values.resize(g0.points());
    for (int i = 0; i < g0.points(); ++i) h.values[i] = point_log(g0.values[i], g1.values[i]);
    return h;
}

// Geodesic distance on the factor Met(M)_x.
inline double point_distance(const Mat& g0, const Mat& g1, const Mat& gt) {
    Mat h = point_log(g0, g1);
    return std::sqrt(std::max(point_inner(g0, gt, h, h), 0.0));
}

inline double distance_omega2(const SPDMatrixField& g0, const SPDMatrixField& g1) {
    check_field(g0);
    check_field(g1);
    if (g0.points() != g1.points()) throw DomainError("fields live on different bases");
    double s = 0;
    for (int i = 0; i < g0.points(); ++i) {
        double d = point_distance(g0.values[i], g1.values[i], g0.gtilde[i]);
        s += g0.weights[i] * d * d;
    }
    return std::sqrt(s);
}

// ------------------------------------------------------------ curvature

// R_g(h, k) l at one point, from g^{-1} R(h,k) l = 1/4 [[H,K],L] + m/16 (Tr(KL) H - Tr(HL) K)
// + 1/16 (Tr H Tr L K - Tr K Tr L H) + 1/16 (Tr K Tr(HL) - Tr H Tr(KL)) Id.
inline Mat point_curvature(const Mat& g, const Mat& h, const Mat& k, const Mat& l) {
    const int m = int(g.rows());
    if (m == 1) return Mat::Zero(1, 1);  // every term cancels for scalars
    Eigen::LLT<Mat> llt(g);
    Mat H = llt.solve(h), K = llt.solve(k), L = llt.solve(l);
    Mat HK = H * K - K * H;
    Mat R = 0.25 * (HK * L - L * HK) + (m / 16.0) * ((K * L).trace() * H - (H * L).trace() * K) +
            (1 / 16.0) * (H.trace() * L.trace() * K - K.trace() * L.trace() * H) +
            (1 / 16.0) * (K.trace() * (H * L).trace() - H.trace() * (K * L).trace()) * Mat::Identity(m, m);
    return g * R;
}

inline SymTangentField curvature_tensor(const SPDMatrixField& g, const SymTangentField& h, const SymTangentField& k,
                                        const SymTangentField& l) {
    check_tangent(g, h);
    check_tangent(g, k);
    check_tangent(g, l);
    SymTangentField r;
    for (int i = 0; i < g.points(); ++i)
        r.values.push_back(point_curvature(g.values[i], h.values[i], k.values[i], l.values[i]));
    return r;
}

// Integrand of the sectional curvature numerator <R(h,k)k, h> (unnormalized) at one point:
// (1/4 Tr([H,K]^2) + m/16 (Tr(HK)^2 - Tr(H^2) Tr(K^2)) + 1/16 Tr((Tr K H - Tr H K)^2)) vol(g).
inline double point_sectional_form(const Mat& g, const Mat& gt, const Mat& h, const Mat& k) {
    const int m = int(g.rows());
    if (m == 1) return 0.0;
    Eigen::LLT<Mat> llt(g);
    Mat H = llt.solve(h), K = llt.solve(k);
    Mat C = H * K - K * H, D = K.trace() * H - H.trace() * K;
    const double hk = (H * K).trace();
    double v = 0.25 * (C * C).trace() + (m / 16.0) * (hk * hk - (H * H).trace() * (K * K).trace()) +
               (1 / 16.0) * (D * D).trace();
    return v * density(g, gt);
}

struct SectionalResult {
    double value = 0;
    double orthonormality_deviation = 0;
};

// Sectional curvature of the plane P(h, k); pairs within 1e-3 of orthonormal are
// Gram-Schmidt corrected.
inline SectionalResult sectional_curvature(const SPDMatrixField& g, SymTangentField h, SymTangentField k) {
    check_tangent(g, h);
    check_tangent(g, k);
    double hh = ebin_inner(g, h, h), kk = ebin_inner(g, k, k), hk = ebin_inner(g, h, k);
    SectionalResult r;
    r.orthonormality_deviation = std::max({std::abs(hh - 1), std::abs(kk - 1), std::abs(hk)});
    if (r.orthonormality_deviation > 1e-3)
        throw PreconditionError("pair is not orthonormal (deviation " + std::to_string(r.orthonormality_deviation) + ")");
    if (r.orthonormality_deviation > 1e-6) {
        for (auto& v : h.values) v /= std::sqrt(hh);
        const double c = ebin_inner(g, k, h);
        for (int i = 0; i < g.points(); ++i) k.values[i] -= c * h.values[i];
        const double n = std::sqrt(ebin_inner(g, k, k));
        for (auto& v : k.values) v /= n;
    }
    for (int i = 0; i < g.points(); ++i)
        r.value += g.weights[i] * point_sectional_form(g.values[i], g.gtilde[i], h.values[i], k.values[i]);
    return r;
}

// (sqrt(m)/4) Omega_2(g0, g1) - |sqrt Vol(F, g0) - sqrt Vol(F, g1)|, nonnegative by the
// Lipschitz bound on sqrt(Vol).
inline double volume_lipschitz_gap(const SPDMatrixField& g0, const SPDMatrixField& g1, const std::vector<bool>& mask) {
    if (int(mask.size()) != g0.points()) throw DomainError("mask needs one entry per point");
    const double d = distance_omega2(g0, g1);
    return std::sqrt(double(g0.dim())) / 4 * d - std::abs(std::sqrt(volume(g0, mask)) - std::sqrt(volume(g1, mask)));
}

}  // namespace shapegeo::met
