#pragma once
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "kernels.hpp"
#include "numerics.hpp"

namespace shapegeo::landmarks {

// Positions and momenta are n x d matrices, one landmark per row.
struct State {
    Mat q, p;
};

inline Vec flatten(const Mat& m) {
    Vec v(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index a = 0; a < m.cols(); ++a) v[i * m.cols() + a] = m(i, a);
    return v;
}

inline Mat unflatten(const Eigen::Ref<const Vec>& v, Eigen::Index n, Eigen::Index d) {
    Mat m(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index a = 0; a < d; ++a) m(i, a) = v[i * d + a];
    return m;
}

inline Vec pack(const State& s) {
    Vec y(2 * s.q.size());
    y << flatten(s.q), flatten(s.p);
    return y;
}

inline State unpack(const Vec& y, Eigen::Index n, Eigen::Index d) {
    return {unflatten(y.head(n * d), n, d), unflatten(y.tail(n * d), n, d)};
}

inline void check_distinct(const Kernel& k, const Mat& q) {
    const double tol = 1e-9 * k.sigma;
    for (Eigen::Index i = 0; i < q.rows(); ++i)
        for (Eigen::Index j = i + 1; j < q.rows(); ++j)
            if ((q.row(i) - q.row(j)).norm() < tol)
                throw DegenerateConfiguration("landmarks " + std::to_string(i) + " and " +
                                              std::to_string(j) + " coincide");
}

inline Mat cometric_apply(const Kernel& k, const Mat& q, const Mat& p) {
    const Eigen::Index n = q.rows();
    Mat v = Mat::Zero(n, q.cols());
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            v.row(i) += k.profile(k.distance(q.row(i).transpose(), q.row(j).transpose())) * p.row(j);
    return v;
}

inline double metric_eval(const Kernel& k, const Mat& q, const Mat& v, const Mat& w) {
    Mat G = gram_matrix(k, q);
    Eigen::LDLT<Mat> ldlt(G);
    Eigen::SelfAdjointEigenSolver<Mat> es(G, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0) || hi / lo > 1e12) throw DegenerateConfiguration("Gram matrix is near singular");
    return flatten(v).dot(ldlt.solve(flatten(w)));
}

inline double hamiltonian(const Kernel& k, const State& s) {
    return 0.5 * (s.p.array() * cometric_apply(k, s.q, s.p).array()).sum();
}

// Right-hand side of the Hamiltonian geodesic system on packed states.
inline Vec geodesic_rhs(const Kernel& k, const Vec& y, Eigen::Index n, Eigen::Index d) {
    Vec out = Vec::Zero(y.size());
    const double* q = y.data();
    const double* p = y.data() + n * d;
    double* dq = out.data();
    double* dp = out.data() + n * d;
    const bool wp = k.family == KernelFamily::WeilPetersson;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index a = 0; a < d; ++a) dq[i * d + a] += p[i * d + a] * k.profile(0.0);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double r2 = 0, pp = 0;
            for (Eigen::Index a = 0; a < d; ++a) {
                double z = q[i * d + a] - q[j * d + a];
                r2 += z * z;
                pp += p[i * d + a] * p[j * d + a];
            }
            const double r = wp ? q[i] - q[j] : std::sqrt(r2);
            const double phi = k.profile(r);
            // gradient of phi(|q_i - q_j|) in q_i is ratio * (q_i - q_j)
            const double ratio = wp ? 0.0 : k.radial_ratio(r);
            const double dwp = wp ? k.profile_d1(r) : 0.0;
            for (Eigen::Index a = 0; a < d; ++a) {
                dq[i * d + a] += phi * p[j * d + a];
                dq[j * d + a] += phi * p[i * d + a];
                double g = wp ? dwp : ratio * (q[i * d + a] - q[j * d + a]);
                dp[i * d + a] -= pp * g;
                dp[j * d + a] += pp * g;
            }
        }
    }
    return out;
}

inline ODESolution geodesic_shoot(const Kernel& k, const State& s0, const TimeGrid& grid, int stride = 1) {
    check_distinct(k, s0.q);
    const Eigen::Index n = s0.q.rows(), d = s0.q.cols();
    return rk4_integrate([&](double, const Vec& y) { return geodesic_rhs(k, y, n, d); }, pack(s0), grid,
                         stride);
}

inline Mat shoot_endpoint(const Kernel& k, const Mat& q0, const Mat& p0, const TimeGrid& grid) {
    auto sol = geodesic_shoot(k, {q0, p0}, grid, grid.steps);
    return unpack(sol.back(), q0.rows(), q0.cols()).q;
}

// Jacobian of the endpoint positions with respect to initial momenta by
// integrating the variational equation alongside the geodesic. Products of
// the RHS Jacobian with the sensitivity columns use central differences.
inline Mat endpoint_sensitivity(const Kernel& k, const Mat& q0, const Mat& p0, const TimeGrid& grid) {
    const Eigen::Index n = q0.rows(), d = q0.cols(), m = n * d, s = 2 * m;
    Vec y0(s + s * m);
    y0.head(s) = pack({q0, p0});
    Mat phi0 = Mat::Zero(s, m);
    phi0.bottomRows(m).setIdentity();
    y0.tail(s * m) = Eigen::Map<Vec>(phi0.data(), s * m);
    auto rhs = [&](double, const Vec& y) {
        Vec x = y.head(s);
        Vec out(y.size());
        out.head(s) = geodesic_rhs(k, x, n, d);
        Eigen::Map<const Mat> phi(y.data() + s, s, m);
        Mat dphi(s, m);
        for (Eigen::Index c = 0; c < m; ++c) {
            // directional difference gives J * phi_c without forming J
            const double h = 1e-6 * std::max(1.0, x.norm()) / std::max(1e-300, phi.col(c).norm());
            Vec fp = geodesic_rhs(k, Vec(x + h * phi.col(c)), n, d);
            Vec fm = geodesic_rhs(k, Vec(x - h * phi.col(c)), n, d);
            dphi.col(c) = (fp - fm) / (2 * h);
        }
        out.tail(s * m) = Eigen::Map<Vec>(dphi.data(), s * m);
        return out;
    };
    auto sol = rk4_integrate(rhs, y0, grid, grid.steps);
    Eigen::Map<const Mat> phi(sol.back().data() + s, s, m);
    return phi.topRows(m);
}

struct MatchOptions {
    TimeGrid grid{0.0, 1.0, 200};
    int max_iter = 60;
    double tol = 1e-10;     // target residual (max norm)
    double accept = 1e-6;   // residual regarded as success
};

struct MatchResult {
    Mat p0;
    double residual = 0.0;
    int iterations = 0;
};

// Geodesic matching by Newton shooting on the initial momenta with backtracking.
inline MatchResult geodesic_match(const Kernel& k, const Mat& q0, const Mat& q1, const MatchOptions& opt = {}) {
    if (q0.rows() != q1.rows() || q0.cols() != q1.cols())
        throw DomainError("landmark configurations differ in shape");
    check_distinct(k, q0);
    check_distinct(k, q1);
    const Eigen::Index n = q0.rows(), d = q0.cols(), m = n * d;
    MatchResult res;
    Mat G = gram_matrix(k, q0);
    Mat p = unflatten(G.ldlt().solve(flatten(q1 - q0)), n, d);
    auto residual_of = [&](const Mat& pp) -> Vec {
        try {
            return flatten(shoot_endpoint(k, q0, pp, opt.grid) - q1);
        } catch (const IntegrationDiverged&) {
            return Vec::Constant(m, std::numeric_limits<double>::infinity());
        }
    };
    Vec r = residual_of(p);
    double rn = r.lpNorm<Eigen::Infinity>();
    int it = 0;
    for (; it < opt.max_iter && rn > opt.tol; ++it) {
        Mat J(m, m);
        if (m <= 40) {
            Vec pf = flatten(p);
            for (Eigen::Index c = 0; c < m; ++c) {
                const double h = 1e-6 * std::max(1.0, std::abs(pf[c]));
                Vec pp = pf, pm = pf;
                pp[c] += h;
                pm[c] -= h;
                J.col(c) = (residual_of(unflatten(pp, n, d)) - residual_of(unflatten(pm, n, d))) / (2 * h);
            }
        } else {
            J = endpoint_sensitivity(k, q0, p, opt.grid);
        }
        Vec step = J.colPivHouseholderQr().solve(-r);
        double lambda = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 30; ++ls) {
            Mat pt = p + lambda * unflatten(step, n, d);
            Vec rt = residual_of(pt);
            double rtn = rt.lpNorm<Eigen::Infinity>();
            if (std::isfinite(rtn) && rtn < rn) {
                p = pt;
                r = rt;
                rn = rtn;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) break;
    }
    res.p0 = p;
    res.residual = rn;
    res.iterations = it;
    if (!(rn <= opt.accept)) throw MatchFailed(rn);
    return res;
}

// Sectional (Gauss) curvature of the two-landmark space on the line at separation rho.
// The derivative term uses K'(rho); with K'(0) in its place the value disagrees with
// the intrinsic curvature of the metric.
inline double sectional_curvature_two_landmarks(const Kernel& k, double rho) {
    const double K0 = k.profile(0.0), K = k.profile(rho);
    const double K1 = k.profile_d1(rho), K2 = k.profile_d2(rho);
    return (K0 - K) / (K0 + K) * K2 - (2 * K0 - K) / ((K0 + K) * (K0 + K)) * K1 * K1;
}

inline Vec induced_velocity_field(const Kernel& k, const State& s, const Vec& x) {
    Vec v = Vec::Zero(x.size());
    for (Eigen::Index j = 0; j < s.q.rows(); ++j)
        v += k.profile(k.distance(x, s.q.row(j).transpose())) * s.p.row(j).transpose();
    return v;
}

inline double min_pairwise_distance(const Mat& q) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < q.rows(); ++i)
        for (Eigen::Index j = i + 1; j < q.rows(); ++j) best = std::min(best, (q.row(i) - q.row(j)).norm());
    return best;
}

}  // namespace shapegeo::landmarks
