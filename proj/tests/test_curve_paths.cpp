#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shapegeo/curve_flows.hpp"
#include "shapegeo/curve_paths.hpp"

using namespace shapegeo;
using namespace shapegeo::curves;

namespace {
std::vector<Curve> random_path(std::mt19937_64& rng, int n, int T) {
    Curve a = oracle::random_curve(rng, n), b = oracle::random_curve(rng, n);
    b.col(0).array() += 0.4;
    std::vector<Curve> p;
    for (int k = 0; k <= T; ++k) {
        double t = double(k) / T;
        p.push_back((1 - t) * a + t * b + 0.05 * std::sin(pi * t) * oracle::random_field(rng, n, 2, 3));
    }
    return p;
}
}  // namespace

TEST(PathEnergy, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(1);
    std::vector<CurveMetric> ms = {CurveMetric::L2(), CurveMetric::GA(0.5),
                                   CurveMetric::Conformal([](double l) { return l * l; }, [](double l) { return 2 * l; }),
                                   CurveMetric::Elastic(1.0, 0.5), CurveMetric::Elastic(0.7, 1.3),
                                   CurveMetric::H1Scale()};
    for (auto& m : ms)
        for (bool hor : {false, true}) {
            if (hor && !m.is_local()) continue;
            EnergyMode mode{hor, 0.03};
            auto p = random_path(rng, 16, 4);
            std::vector<Mat> g;
            path_energy_grad(m, p, mode, g);
            for (int k = 1; k < 4; ++k)
                for (int j = 0; j < 16; j += 5)
                    for (int c = 0; c < 2; ++c) {
                        auto pp = p, pm = p;
                        const double h = 1e-6;
                        pp[k](j, c) += h;
                        pm[k](j, c) -= h;
                        double fd = (path_energy(m, pp, mode) - path_energy(m, pm, mode)) / (2 * h);
                        EXPECT_NEAR(g[k](j, c), fd, 1e-6 * std::max(1.0, std::abs(fd))) << m.name() << hor;
                    }
        }
}

TEST(PathEnergy, ContinuumValueForUniformScaling) {
    // c(t) = (1 + t) circle: L2 energy int 2 pi (1 + t) dt = 3 pi (midpoint rule is exact here)
    std::vector<Curve> p;
    for (int k = 0; k <= 8; ++k) p.push_back(circle(64, 1.0 + k / 8.0));
    EXPECT_NEAR(path_energy(CurveMetric::L2(), p), 3 * pi, 1e-10);
}

TEST(Bvp, ConstantPathForEqualEndpoints) {
    Curve c = circle(32);
    auto r = geodesic_bvp(CurveMetric::GA(0.5), c, c);
    EXPECT_EQ(r.energy, 0.0);
    for (auto& x : r.path.curves) EXPECT_EQ((x - c).norm(), 0.0);
}

TEST(Bvp, GAGeodesicConvergesMonotonically) {
    const int n = 32;
    Curve c0 = ellipse(n, 1.0, 0.6), c1 = ellipse(n, 0.8, 0.7, 0.5, 0.2, 0.4);
    BvpOptions opt;
    opt.slices = 8;
    const auto m = CurveMetric::GA(0.5);
    auto r = geodesic_bvp(m, c0, c1, opt);
    EXPECT_LT(r.grad_max, 1e-5);
    for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1]);
    std::vector<Curve> lin;
    for (int k = 0; k <= 8; ++k) lin.push_back((1 - k / 8.0) * c0 + k / 8.0 * c1);
    EXPECT_LT(r.energy, path_energy(m, lin, opt.mode));
    EXPECT_NEAR(path_energy(m, r.path.curves, opt.mode), r.energy, 1e-12 * r.energy);
    // intermediates stay smooth immersions
    for (auto& c : r.path.curves) {
        ArcData a = arclength_data(c);
        EXPECT_GT(a.speed.minCoeff(), 0.3);
        EXPECT_LT(a.kappa.cwiseAbs().maxCoeff(), 5.0);
    }
}

TEST(Bvp, EnergyInvariantUnderReversal) {
    const int n = 32;
    Curve c0 = ellipse(n, 1.0, 0.6), c1 = ellipse(n, 1.0, 0.7, 0.3, 0.2, 0.0);
    BvpOptions opt;
    opt.slices = 8;
    const auto m = CurveMetric::GA(0.5);
    auto r = geodesic_bvp(m, c0, c1, opt);
    auto rev = geodesic_bvp(m, c1, c0, opt);
    EXPECT_NEAR(rev.energy, r.energy, 1e-8 * r.energy);
    std::vector<Curve> back(r.path.curves.rbegin(), r.path.curves.rend());
    EXPECT_NEAR(path_energy(m, back, opt.mode), r.energy, 1e-12 * r.energy);
}

TEST(Bvp, FullEnergyModeAlsoConverges) {
    const int n = 32;
    Curve c0 = ellipse(n, 1.0, 0.6), c1 = ellipse(n, 1.0, 0.7, 0.3, 0.0, 0.0);
    BvpOptions opt;
    opt.slices = 8;
    opt.mode.horizontal = false;
    auto r = geodesic_bvp(CurveMetric::GA(0.5), c0, c1, opt);
    EXPECT_LT(r.grad_max, 1e-5);
}

TEST(Bvp, StagnationReportsBestPath) {
    BvpOptions opt;
    opt.slices = 4;
    opt.lbfgs.max_iter = 2;
    try {
        geodesic_bvp(CurveMetric::GA(0.5), ellipse(32, 1.0, 0.6), ellipse(32, 0.8, 0.7, 0.5, 0.2, 0.4), opt);
        FAIL() << "expected BvpFailed";
    } catch (const BvpFailed& e) {
        EXPECT_EQ(e.best_path.size(), 5u);
    }
}

TEST(Bvp, GAMomentaConservedAlongGeodesic) {
    const int n = 32, T = 48;
    const double A = 0.5;
    const auto m = CurveMetric::GA(A);
    Curve c0 = constant_speed(ellipse(n, 1.0, 0.6)), c1 = constant_speed(ellipse(n, 0.8, 0.7, 0.5, 0.2, 0.4));
    BvpOptions opt;
    opt.slices = T;
    auto r = geodesic_bvp(m, c0, c1, opt);
    auto M = path_momenta(m, r.path, opt.mode);
    const double dl = M.linear_drift, da = M.angular_drift;
    EXPECT_LT(dl, 1e-3);
    EXPECT_LT(da, 1e-3);
}

TEST(Bvp, CigarCrossSectionForDistantTranslates) {
    const int n = 48;
    const double A = 0.25;
    BvpOptions opt;
    opt.slices = 20;
    auto r = geodesic_bvp(CurveMetric::GA(A), ellipse(n, 0.6, 0.4), ellipse(n, 0.4, 0.6, 5.0, 0.0), opt);
    const Curve& mid = r.path.curves[10];
    double width = mid.col(1).maxCoeff() - mid.col(1).minCoeff();
    EXPECT_NEAR(width, 2 * std::sqrt(A), 0.25 * 2 * std::sqrt(A));
}

TEST(Bvp, ElasticScalingMatchesFlatDistance) {
    // radius 1 -> 4: the SRVT images are q0 and 2 q0, squared flat distance 2 pi
    const int n = 64;
    BvpOptions opt;
    opt.slices = 16;
    auto r = geodesic_bvp(CurveMetric::Elastic(1.0, 0.5), circle(n, 1.0), circle(n, 4.0), opt);
    EXPECT_LT(r.grad_max, 1e-5);
    EXPECT_NEAR(r.energy, 2 * pi, 2e-3 * 2 * pi);
    Mat q0 = srvt(circle(n, 1.0)), q1 = srvt(circle(n, 4.0));
    EXPECT_NEAR((q1 - q0).squaredNorm() * dtheta(n), 2 * pi, 1e-10);
}

TEST(Bvp, ElasticRotationMatchesFlatDistance) {
    const int n = 64;
    const double phi = 0.9;
    Curve c0 = circle(n), c1 = circle(n, 1.0, 0, 0, phi);
    Mat q0 = srvt(c0), q1 = srvt(c1);
    double flat = (q1 - q0).squaredNorm() * dtheta(n);
    EXPECT_NEAR(flat, 4 * pi * (1 - std::cos(phi)), 1e-10);
    // the flat SRVT path is already closed here
    auto init = srvt_flat_path(c0, c1, 16);
    for (auto& c : init) EXPECT_LT(closure_defect(srvt(c)).norm(), 1e-10);
    auto r = geodesic_bvp(CurveMetric::Elastic(1.0, 0.5), c0, c1);
    EXPECT_NEAR(r.energy, flat, 2e-3 * flat);
}

TEST(Zigzag, LengthsDecreaseWithTeeth) {
    Curve c0 = circle(128, 1.0), c1 = circle(128, 2.0);
    ZigzagOptions opt;
    opt.steps_per_phase = 80;
    std::vector<double> L;
    for (int teeth : {8, 32}) L.push_back(path_length(CurveMetric::L2(), zigzag_short_path(c0, c1, teeth, opt)));
    EXPECT_LT(L[1], L[0]);
}

TEST(Zigzag, EndpointsAndIntermediates) {
    Curve c0 = circle(64, 1.0), c1 = circle(64, 2.0);
    auto p = zigzag_short_path(c0, c1, 6);
    ArcData a0 = arclength_data(p.curves.front()), a1 = arclength_data(p.curves.back());
    EXPECT_NEAR(a0.length, 2 * pi, 1e-9);
    EXPECT_NEAR(a1.length, 4 * pi, 1e-9);
    EXPECT_DOUBLE_EQ(p.times.front(), 0.0);
    EXPECT_DOUBLE_EQ(p.times.back(), 1.0);
    ArcData mid = arclength_data(p.curves[p.curves.size() / 2]);
    EXPECT_GT(mid.length, 2 * 6 * 1.0);  // twelve edges of length about one
}

TEST(Zigzag, GALengthAboveSweptAreaBound) {
    Curve c0 = circle(128, 1.0), c1 = circle(128, 2.0);
    double area = enclosed_area(c1) - enclosed_area(c0);
    EXPECT_NEAR(area, 3 * pi, 1e-10);
    double bound = ga_swept_area_bound(1.0, 2 * pi, 4 * pi, area);
    ZigzagOptions opt;
    opt.steps_per_phase = 60;
    for (int teeth : {4, 16}) {
        double L = path_length(CurveMetric::GA(1.0), zigzag_short_path(c0, c1, teeth, opt));
        EXPECT_GT(L, bound);
    }
    // the radial path obeys the bound as well
    CurvePath radial;
    for (int k = 0; k <= 200; ++k) {
        radial.times.push_back(k / 200.0);
        radial.curves.push_back(circle(128, 1.0 + k / 200.0));
    }
    EXPECT_GT(path_length(CurveMetric::GA(1.0), radial), bound);
}

TEST(Zigzag, RejectsNonStarShaped) {
    Curve c = circle(64);
    Curve rev = c.colwise().reverse();
    EXPECT_THROW(zigzag_short_path(rev, circle(64, 2.0), 4), DomainError);
}
