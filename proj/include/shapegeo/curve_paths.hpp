#pragma once
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include <ceres/jet.h>

#include "curves.hpp"

namespace shapegeo::curves {

struct CurvePath {
    std::vector<double> times;
    std::vector<Curve> curves;
};

// How a path energy treats velocities of local metrics: the full velocity, or
// only its normal part plus a small tangential penalty beta (horizontal energy).
// `oversample` evaluates each slice on a finer grid after trigonometric
// interpolation; on the bare N-point grid the optimizer can hide kinks between nodes.
// The midpoint rule decouples odd and even time nodes, so kinks can alternate
// between neighbouring curves unnoticed; the trapezoid rule sees every node.
enum class TimeQuadrature { Trapezoid, Midpoint };

struct EnergyMode {
    bool horizontal = false;
    double beta = 1e-2;
    int oversample = 2;
    // Horizontal energies barely see the parametrization; this weight pulls interior
    // curves towards constant speed, lambda * sum_j (s_j - mean s)^2 dtheta per curve.
    double gauge = 1.0;
    TimeQuadrature quadrature = TimeQuadrature::Trapezoid;
};

namespace detail {

using J9 = ceres::Jet<double, 9>;

// Per-node integrand of G_m(V, V) in terms of d1 = m_theta, d2 = m_thetatheta,
// V, dV = V_theta and the length ell; integrate against dtheta.
template <class T>
T node_energy(const CurveMetric& m, const EnergyMode& mode, const T* d1, const T* d2, const T* V,
              const T* dV, const T& ell, double phi, double dphi) {
    using std::sqrt;
    T s2 = d1[0] * d1[0] + d1[1] * d1[1];
    T s = sqrt(s2);
    switch (m.kind) {
        case CurveMetric::Kind::L2:
        case CurveMetric::Kind::GA:
        case CurveMetric::Kind::Conformal: {
            T psi;
            if (m.kind == CurveMetric::Kind::Conformal) {
                psi = T(phi) + (ell - T(ell.a)) * dphi;
            } else {
                T cross = d1[0] * d2[1] - d1[1] * d2[0];
                T kap = cross / (s2 * s);
                psi = T(1.0) + m.A * kap * kap;
            }
            if (!mode.horizontal) return psi * (V[0] * V[0] + V[1] * V[1]) * s;
            T al = -V[0] * d1[1] + V[1] * d1[0];  // <V, J d1>
            T ga = V[0] * d1[0] + V[1] * d1[1];   // <V, d1>
            return psi * (al * al + mode.beta * ga * ga) / s;
        }
        case CurveMetric::Kind::Elastic: {
            T al = -dV[0] * d1[1] + dV[1] * d1[0];
            T ga = dV[0] * d1[0] + dV[1] * d1[1];
            return (m.a * m.a * al * al + m.b * m.b * ga * ga) / (s2 * s);
        }
        default:
            return s * (V[0] * V[0] + V[1] * V[1]) / ell + ell * (dV[0] * dV[0] + dV[1] * dV[1]) / s;
    }
}


struct SliceGrad {
    double f = 0.0;
    Mat gm, gV;  // df/dm, df/dV
};

// Trigonometric interpolation from n to n * factor nodes as a dense matrix (Nyquist dropped).
inline const Mat& upsample_matrix(Eigen::Index n, int factor) {
    thread_local std::map<std::pair<Eigen::Index, int>, Mat> cache;
    auto key = std::make_pair(n, factor);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const int N = int(n), M = N * factor;
    Mat U(M, N);
    for (int j = 0; j < N; ++j) {
        spectral::CVec F = spectral::fft(Vec::Unit(N, j)), G = spectral::CVec::Zero(M);
        for (int i = 0; i < N; ++i) {
            int k = spectral::wavenumber(i, N);
            if (2 * std::abs(k) == N) continue;
            G[(k + M) % M] = F[i] * double(factor);
        }
        U.col(j) = spectral::ifft(G);
    }
    return cache.emplace(key, std::move(U)).first->second;
}

// Energy G_m(V, V) of a single slice (and its gradient when wanted).
inline SliceGrad slice_energy(const CurveMetric& m, const EnergyMode& mode, const Mat& mid, const Mat& V,
                              bool want_grad) {
    if (mode.oversample > 1) {
        const Mat& U = upsample_matrix(mid.rows(), mode.oversample);
        EnergyMode fine = mode;
        fine.oversample = 1;
        SliceGrad sg = slice_energy(m, fine, U * mid, U * V, want_grad);
        if (want_grad) {
            sg.gm = U.transpose() * sg.gm;
            sg.gV = U.transpose() * sg.gV;
        }
        return sg;
    }
    const Eigen::Index n = mid.rows();
    const double dth = dtheta(n);
    Mat d1 = spectral::deriv_cols(mid, 1), d2 = spectral::deriv_cols(mid, 2);
    Mat dV = spectral::deriv_cols(V, 1);
    Vec sp = d1.rowwise().norm();
    if (sp.minCoeff() < 1e-10) throw ImmersionViolated("path slice lost immersion");
    const double ell = sp.sum() * dth;
    const double phi = m.kind == CurveMetric::Kind::Conformal ? m.phi(ell) : 0.0;
    const double dphi = m.kind == CurveMetric::Kind::Conformal ? m.dphi(ell) : 0.0;
    SliceGrad out;
    if (!want_grad) {
        for (Eigen::Index j = 0; j < n; ++j) {
            std::array<J9, 2> a1{J9(d1(j, 0)), J9(d1(j, 1))}, a2{J9(d2(j, 0)), J9(d2(j, 1))};
            std::array<J9, 2> v{J9(V(j, 0)), J9(V(j, 1))}, dv{J9(dV(j, 0)), J9(dV(j, 1))};
            out.f += node_energy<J9>(m, mode, a1.data(), a2.data(), v.data(), dv.data(), J9(ell), phi, dphi).a;
        }
        out.f *= dth;
        return out;
    }
    Mat g1(n, 2), g2(n, 2), gV(n, 2), gdV(n, 2);
    double gell = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        std::array<J9, 2> a1{J9(d1(j, 0), 0), J9(d1(j, 1), 1)};
        std::array<J9, 2> a2{J9(d2(j, 0), 2), J9(d2(j, 1), 3)};
        std::array<J9, 2> v{J9(V(j, 0), 4), J9(V(j, 1), 5)};
        std::array<J9, 2> dv{J9(dV(j, 0), 6), J9(dV(j, 1), 7)};
        J9 L(ell, 8);
        J9 e = node_energy<J9>(m, mode, a1.data(), a2.data(), v.data(), dv.data(), L, phi, dphi);
        out.f += e.a;
        g1(j, 0) = e.v[0];
        g1(j, 1) = e.v[1];
        g2(j, 0) = e.v[2];
        g2(j, 1) = e.v[3];
        gV(j, 0) = e.v[4];
        gV(j, 1) = e.v[5];
        gdV(j, 0) = e.v[6];
        gdV(j, 1) = e.v[7];
        gell += e.v[8];
    }
    out.f *= dth;
    // d ell / d d1_j = d1_j / s_j * dtheta
    Mat gl = d1.array().colwise() / sp.array();
    g1 += gell * dth * gl;
    // D is skew and D^2 symmetric on the spectral grid
    out.gm = (-spectral::deriv_cols(g1, 1) + spectral::deriv_cols(g2, 2)) * dth;
    out.gV = (gV - spectral::deriv_cols(gdV, 1)) * dth;
    return out;
}

}  // namespace detail

namespace detail {

inline double speed_gauge(const Curve& c, double lambda, Mat* grad) {
    const double dth = dtheta(c.rows());
    Mat d1 = spectral::deriv_cols(c, 1);
    Vec sp = d1.rowwise().norm();
    Vec dev = sp.array() - sp.mean();
    if (grad) {
        // the mean term drops out because dev sums to zero
        Mat g1 = d1.array().colwise() * (2 * lambda * dth * dev.array() / sp.array());
        *grad -= spectral::deriv_cols(g1, 1);
    }
    return lambda * dev.squaredNorm() * dth;
}

inline double path_energy_impl(const CurveMetric& m, const std::vector<Curve>& path, const EnergyMode& mode,
                               std::vector<Mat>* grad) {
    const int T = int(path.size()) - 1;
    if (grad) grad->assign(path.size(), Mat::Zero(path[0].rows(), 2));
    if (T < 1) return 0.0;
    const double dt = 1.0 / T;
    const bool want = grad != nullptr;
    double E = 0.0;
    for (int k = 0; k < T; ++k) {
        Mat V = (path[k + 1] - path[k]) / dt;
        if (mode.quadrature == TimeQuadrature::Midpoint) {
            auto sg = slice_energy(m, mode, 0.5 * (path[k] + path[k + 1]), V, want);
            E += sg.f * dt;
            if (!want) continue;
            (*grad)[k] += 0.5 * sg.gm * dt - sg.gV;
            (*grad)[k + 1] += 0.5 * sg.gm * dt + sg.gV;
        } else {
            auto a = slice_energy(m, mode, path[k], V, want);
            auto b = slice_energy(m, mode, path[k + 1], V, want);
            E += 0.5 * (a.f + b.f) * dt;
            if (!want) continue;
            Mat gv = 0.5 * (a.gV + b.gV);
            (*grad)[k] += 0.5 * a.gm * dt - gv;
            (*grad)[k + 1] += 0.5 * b.gm * dt + gv;
        }
    }
    if (mode.horizontal && m.is_local() && mode.gauge > 0)
        for (int k = 1; k < T; ++k) E += speed_gauge(path[k], mode.gauge, grad ? &(*grad)[k] : nullptr);
    return E;
}

}  // namespace detail

// Discrete path energy sum_k G(V_k, V_k) dt with difference quotients V_k of
// consecutive curves and the metric evaluated at the slice ends (trapezoid) or
// at the slice midpoint.
inline double path_energy(const CurveMetric& m, const std::vector<Curve>& path, EnergyMode mode = {}) {
    return detail::path_energy_impl(m, path, mode, nullptr);
}

// Gradient with respect to every curve of the path.
inline double path_energy_grad(const CurveMetric& m, const std::vector<Curve>& path, const EnergyMode& mode,
                               std::vector<Mat>& grad) {
    return detail::path_energy_impl(m, path, mode, &grad);
}

// Length sum_k sqrt(G_{m_k}(V_k, V_k)) dt on the path's own time stamps. For local
// metrics `horizontal` keeps only the normal part of the velocity.
inline double path_length(const CurveMetric& m, const CurvePath& p, bool horizontal = true) {
    double L = 0.0;
    for (std::size_t k = 0; k + 1 < p.curves.size(); ++k) {
        const double dt = p.times[k + 1] - p.times[k];
        Mat mid = 0.5 * (p.curves[k] + p.curves[k + 1]);
        Mat V = (p.curves[k + 1] - p.curves[k]) / dt;
        double g;
        if (horizontal && m.is_local()) {
            ArcData a = arclength_data(mid);
            Mat Vn = a.n.array().colwise() * rowdot(V, a.n).array();
            g = metric_inner(m, mid, Vn, Vn);
        } else {
            g = metric_inner(m, mid, V, V);
        }
        L += std::sqrt(std::max(g, 0.0)) * dt;
    }
    return L;
}

struct BvpOptions {
    int slices = 16;
    EnergyMode mode{.horizontal = true};
    LbfgsOptions lbfgs{.memory = 20, .max_iter = 20000, .grad_tol = 1e-6, .f_rel_tol = 1e-15, .stall_iters = 200};
    double accept_grad = 1e-5;  // max |grad| counted as converged
    bool srvt_init = true;       // flat SRVT initialization for Elastic(1, 1/2)
    bool band_limit = true;      // interior curves keep only modes |k| <= N/3
    double precond_k0 = 4.0;     // 0 switches the smoothing preconditioner off
};

struct BvpResult {
    CurvePath path;
    double energy = 0.0;
    double grad_max = 0.0;
    int iterations = 0;
    std::vector<double> history;
};

// Flat SRVT geodesic between two closed curves, each intermediate projected to closure.
inline std::vector<Curve> srvt_flat_path(const Curve& c0, const Curve& c1, int slices) {
    Mat q0 = srvt(c0), q1 = srvt(c1);
    std::vector<Curve> path;
    for (int k = 0; k <= slices; ++k) {
        double t = double(k) / slices;
        if (k == 0) { path.push_back(c0); continue; }
        if (k == slices) { path.push_back(c1); continue; }
        Mat q = project_closure((1 - t) * q0 + t * q1);
        Mat c = srvt_inverse(q).topRows(c0.rows());
        Eigen::RowVector2d start = (1 - t) * c0.row(0) + t * c1.row(0);
        c.rowwise() += start;
        path.push_back(c);
    }
    return path;
}

inline BvpResult geodesic_bvp(const CurveMetric& m, const Curve& c0, const Curve& c1, const BvpOptions& opt = {}) {
    check_curve(c0);
    check_curve(c1);
    if (c0.rows() != c1.rows()) throw DomainError("endpoint curves need the same N");
    const int T = opt.slices;
    const Eigen::Index n = c0.rows();
    std::vector<Curve> path;
    if (opt.srvt_init && m.kind == CurveMetric::Kind::Elastic && std::abs(m.a - 1) < 1e-15 &&
        std::abs(m.b - 0.5) < 1e-15) {
        path = srvt_flat_path(c0, c1, T);
    } else {
        for (int k = 0; k <= T; ++k) {
            double t = double(k) / T;
            path.push_back((1 - t) * c0 + t * c1);
        }
        // push degenerate intermediates off zero speed by a small normal bump
        for (int k = 1; k < T; ++k) {
            Vec sp = deriv(path[k], 1).rowwise().norm();
            if (sp.minCoeff() < 1e-6) {
                Curve bump = circle(int(n), 1e-3);
                path[k] += bump;
            }
        }
    }
    BvpResult res;
    if ((c0 - c1).norm() == 0.0) {
        for (int k = 0; k <= T; ++k) {
            res.path.times.push_back(double(k) / T);
            res.path.curves.push_back(c0);
        }
        return res;
    }
    // Optimization variables z with curves c = P z, P a Fourier multiplier: modes
    // above N/3 are cut when band limiting and the rest damped like 1/(1 + (k/k0)^2)
    // as a smoothing preconditioner.
    const Eigen::Index per = 2 * n;
    Vec w(n), winv(n);
    for (int j = 0; j < int(n); ++j) {
        const int k = spectral::wavenumber(j, int(n));
        w[j] = opt.band_limit && 3 * std::abs(k) > n ? 0.0 : 1.0;
        if (opt.precond_k0 > 0) w[j] /= 1.0 + double(k) * k / (opt.precond_k0 * opt.precond_k0);
        winv[j] = w[j] > 0 ? 1.0 / w[j] : 0.0;
    }
    auto filter = [&](Mat c, const Vec& mult) {
        for (int j = 0; j < 2; ++j) {
            spectral::CVec F = spectral::fft(c.col(j));
            F.array() *= mult.array();
            c.col(j) = spectral::ifft(F);
        }
        return c;
    };
    Vec x((T - 1) * per);
    for (int k = 1; k < T; ++k) {
        Mat z = filter(path[k], winv);
        x.segment((k - 1) * per, per) = Eigen::Map<const Vec>(z.data(), per);
    }
    auto unstack = [&](const Vec& z) {
        std::vector<Curve> p(path);
        for (int k = 1; k < T; ++k) p[k] = filter(Eigen::Map<const Mat>(z.data() + (k - 1) * per, n, 2), w);
        return p;
    };
    Vec band = (w.array() > 0).cast<double>();
    std::vector<Mat> g;
    double true_grad = 0.0;  // max |grad| on the curves themselves, band limited
    auto fg = [&](const Vec& z, Vec& grad) -> double {
        auto p = unstack(z);
        double E;
        try {
            E = path_energy_grad(m, p, opt.mode, g);
        } catch (const ImmersionViolated&) {
            grad.setZero(z.size());
            return std::numeric_limits<double>::infinity();
        }
        grad.resize(z.size());
        double gm = 0.0;
        for (int k = 1; k < T; ++k) {
            gm = std::max(gm, filter(g[k], band).cwiseAbs().maxCoeff());
            Mat gk = filter(g[k], w);
            grad.segment((k - 1) * per, per) = Eigen::Map<const Vec>(gk.data(), per);
        }
        true_grad = gm;
        return E;
    };
    // the preconditioned gradient is smaller than the true one, so tighten and
    // restart until the curves' own gradient meets the tolerance
    LbfgsOptions lo = opt.lbfgs;
    LbfgsResult r;
    Vec scratch;
    for (int round = 0; round < 6; ++round) {
        r = lbfgs_minimize(fg, x, lo);
        fg(r.x, scratch);
        res.iterations += r.iterations;
        if (!res.history.empty()) r.history.erase(r.history.begin());
        res.history.insert(res.history.end(), r.history.begin(), r.history.end());
        x = r.x;
        if (true_grad <= opt.lbfgs.grad_tol || r.iterations == 0) break;
        lo.grad_tol *= 0.1;
    }
    auto best = unstack(r.x);
    res.energy = r.f;
    res.grad_max = true_grad;
    for (int k = 0; k <= T; ++k) {
        res.path.times.push_back(double(k) / T);
        res.path.curves.push_back(best[k]);
    }
    if (!(r.grad_max <= opt.accept_grad)) throw BvpFailed("optimizer stalled with max |grad| " + std::to_string(r.grad_max), best);
    return res;
}

// Linear and angular momenta per slice of a discrete path, for the metric the
// BVP minimizes: c_t -> <c_t,n>n + beta <c_t,v>v when mode.horizontal. The
// velocity is the slice difference quotient, averaged over both slice ends.
struct PathMomenta {
    std::vector<Eigen::Vector2d> linear;
    std::vector<double> angular;
    double linear_drift = 0.0;   // max relative deviation from the first slice
    double angular_drift = 0.0;
    double linear_drift_abs = 0.0, angular_drift_abs = 0.0;  // meaningful when a momentum starts near 0
};

inline PathMomenta path_momenta(const CurveMetric& m, const CurvePath& p, const EnergyMode& mode = {.horizontal = true}) {
    const int T = int(p.curves.size()) - 1;
    if (T < 1) throw DomainError("a path needs at least two curves");
    const Eigen::Index n = p.curves[0].rows();
    const Mat& U = detail::upsample_matrix(n, mode.oversample);
    PathMomenta out;
    for (int k = 0; k < T; ++k) {
        Mat V = (p.curves[k + 1] - p.curves[k]) / (p.times[k + 1] - p.times[k]);
        Eigen::Vector2d L = Eigen::Vector2d::Zero();
        double W = 0;
        for (int e = 0; e < 2; ++e) {
            Mat c = U * p.curves[k + e], v = U * V;
            ArcData a = arclength_data(c);
            Mat ct = v;
            if (mode.horizontal)
                ct = a.n.array().colwise() * rowdot(v, a.n).array() +
                     mode.beta * (a.v.array().colwise() * rowdot(v, a.v).array());
            auto M = conserved_momenta(local_weight(m, a), c, ct, Vec::Ones(c.rows()));
            L += 0.5 * M.linear;
            W += 0.5 * M.angular;
        }
        out.linear.push_back(L);
        out.angular.push_back(W);
    }
    for (int k = 1; k < T; ++k) {
        out.linear_drift_abs = std::max(out.linear_drift_abs, (out.linear[k] - out.linear[0]).norm());
        out.angular_drift_abs = std::max(out.angular_drift_abs, std::abs(out.angular[k] - out.angular[0]));
    }
    out.linear_drift = out.linear_drift_abs / out.linear[0].norm();
    out.angular_drift = out.angular_drift_abs / std::abs(out.angular[0]);
    return out;
}

}  // namespace shapegeo::curves
