#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shapegeo/curves.hpp"

using namespace shapegeo;
using namespace shapegeo::curves;

namespace {
Mat rotate(const Mat& c, double phi) {
    Eigen::Matrix2d R;
    R << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    return c * R.transpose();
}
Mat roll(const Mat& c, int s) {
    Mat out(c.rows(), c.cols());
    for (Eigen::Index j = 0; j < c.rows(); ++j) out.row(j) = c.row((j + s) % c.rows());
    return out;
}
Vec roll(const Vec& c, int s) { return roll(Mat(c), s).col(0); }

std::vector<CurveMetric> all_metrics() {
    return {CurveMetric::L2(), CurveMetric::GA(0.7),
            CurveMetric::Conformal([](double l) { return l; }, [](double) { return 1.0; }),
            CurveMetric::Elastic(1.0, 0.5), CurveMetric::Elastic(2.0, 0.3), CurveMetric::H1Scale()};
}
}  // namespace

TEST(Arclength, CircleCurvatureAndLength) {
    for (double r : {0.5, 1.0, 3.0}) {
        ArcData a = arclength_data(circle(256, r, 0.3, -1.0));
        EXPECT_LT((a.kappa.array() - 1 / r).abs().maxCoeff(), 1e-8);
        EXPECT_NEAR(a.length, 2 * pi * r, 1e-8);
        // normal points to the centre of a counter-clockwise circle
        EXPECT_NEAR(a.n(0, 0), -1.0, 1e-12);
    }
}

TEST(Arclength, InvariantUnderTranslationAndShift) {
    std::mt19937_64 rng(1);
    Curve c = oracle::random_curve(rng, 128);
    ArcData a = arclength_data(c);
    Curve t = c;
    t.col(0).array() += 4.0;
    t.col(1).array() -= 2.0;
    ArcData b = arclength_data(t);
    EXPECT_LT((a.kappa - b.kappa).norm(), 1e-10);
    EXPECT_NEAR(a.length, arclength_data(roll(c, 17)).length, 1e-12);
}

TEST(Arclength, FallbackDerivativeIsClose) {
    ArcData a = arclength_data(circle(512, 1.0), Deriv::CentralDiff);
    EXPECT_LT((a.kappa.array() - 1).abs().maxCoeff(), 1e-4);
}

TEST(Arclength, RejectsBadInput) {
    EXPECT_THROW(arclength_data(Mat::Ones(16, 2)), ImmersionViolated);
    EXPECT_THROW(arclength_data(circle(15)), DomainError);
    EXPECT_THROW(arclength_data(circle(6)), DomainError);
}

TEST(Metric, L2UnitNormalOnCircle) {
    Curve c = circle(128);
    ArcData a = arclength_data(c);
    EXPECT_NEAR(metric_inner(CurveMetric::L2(), c, a.n, a.n), 2 * pi, 1e-10);
}

TEST(Metric, GAWithZeroWeightIsL2) {
    std::mt19937_64 rng(2);
    Curve c = oracle::random_curve(rng, 64);
    Mat h = oracle::random_field(rng, 64, 2), k = oracle::random_field(rng, 64, 2);
    EXPECT_NEAR(metric_inner(CurveMetric::GA(0.0), c, h, k), metric_inner(CurveMetric::L2(), c, h, k), 1e-12);
}

TEST(Metric, ConformalByLength) {
    std::mt19937_64 rng(3);
    Curve c = oracle::random_curve(rng, 64);
    Mat h = oracle::random_field(rng, 64, 2);
    double l = arclength_data(c).length;
    EXPECT_NEAR(metric_inner(all_metrics()[2], c, h, h), l * metric_inner(CurveMetric::L2(), c, h, h), 1e-10);
}

TEST(Metric, BilinearSymmetricPositive) {
    std::mt19937_64 rng(4);
    for (auto& m : all_metrics()) {
        Curve c = oracle::random_curve(rng, 64);
        Mat h = oracle::random_field(rng, 64, 2), k = oracle::random_field(rng, 64, 2),
            l = oracle::random_field(rng, 64, 2);
        double hk = metric_inner(m, c, h, k);
        EXPECT_NEAR(hk, metric_inner(m, c, k, h), 1e-10 * (1 + std::abs(hk))) << m.name();
        EXPECT_NEAR(metric_inner(m, c, 2 * h + l, k), 2 * hk + metric_inner(m, c, l, k), 1e-9) << m.name();
        EXPECT_GT(metric_inner(m, c, h, h), 0.0) << m.name();
    }
}

TEST(Metric, ReparametrizationAndEuclideanInvariance) {
    std::mt19937_64 rng(5);
    for (auto& m : all_metrics()) {
        Curve c = oracle::random_curve(rng, 64);
        Mat h = oracle::random_field(rng, 64, 2), k = oracle::random_field(rng, 64, 2);
        double v = metric_inner(m, c, h, k);
        EXPECT_NEAR(metric_inner(m, roll(c, 9), roll(h, 9), roll(k, 9)), v, 1e-10 * (1 + std::abs(v)));
        Curve rc = rotate(c, 0.7);
        rc.col(0).array() += 3;
        EXPECT_NEAR(metric_inner(m, rc, rotate(h, 0.7), rotate(k, 0.7)), v, 1e-10 * (1 + std::abs(v)));
    }
}

TEST(Srvt, UnitCircle) {
    Curve c = circle(64);
    Mat q = srvt(c);
    for (int j = 0; j < 64; ++j) {
        double t = dtheta(64) * j;
        EXPECT_NEAR(q(j, 0), -std::sin(t), 1e-13);
        EXPECT_NEAR(q(j, 1), std::cos(t), 1e-13);
    }
    EXPECT_LT(closure_defect(q).norm(), 1e-10);
}

TEST(Srvt, Roundtrip) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 5; ++t) {
        Curve c = oracle::random_curve(rng, 512, 6, 0.2);
        Mat back = srvt_inverse(srvt(c));
        EXPECT_EQ(back.rows(), 513);
        Mat ref = c.rowwise() - c.row(0);
        EXPECT_LT((back.topRows(512) - ref).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT((back.row(512)).norm(), 1e-8);  // closed
    }
}

TEST(Srvt, PullbackOfFlatMetric) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        Curve c = t % 2 ? circle(256) : oracle::random_curve(rng, 256);
        Mat h = oracle::random_field(rng, 256, 2, 4), k = oracle::random_field(rng, 256, 2, 4);
        auto p = srvt_pullback_check(c, h, k);
        EXPECT_LT(std::abs(p.elastic - p.flat), 1e-4 * std::abs(p.elastic)) << p.elastic << " " << p.flat;
    }
}

TEST(Srvt, PullbackKillsTranslationsAndScales) {
    Curve c = circle(128);
    Mat tr = Mat::Zero(128, 2);
    tr.col(0).setOnes();
    auto p = srvt_pullback_check(c, tr, tr);
    EXPECT_NEAR(p.elastic, 0.0, 1e-12);
    EXPECT_NEAR(p.flat, 0.0, 1e-12);
    std::mt19937_64 rng(8);
    Mat h = oracle::random_field(rng, 128, 2), k = oracle::random_field(rng, 128, 2);
    auto a = srvt_pullback_check(c, h, k), b = srvt_pullback_check(c, 2 * h, k);
    EXPECT_NEAR(b.elastic, 2 * a.elastic, 1e-10);
    EXPECT_NEAR(b.flat, 2 * a.flat, 1e-6);
}

TEST(Srvt, ClosureProjection) {
    std::mt19937_64 rng(9);
    Mat q = 0.5 * srvt(oracle::random_curve(rng, 128)) + 0.5 * srvt(circle(128, 2.0));
    q += 0.05 * oracle::random_field(rng, 128, 2);
    Mat p = project_closure(q, 4);
    EXPECT_LT(closure_defect(p).norm(), 1e-12);
    EXPECT_LT((p - q).norm(), 0.2 * q.norm());
}

namespace {
// Orthonormal pair of normal fields (a n, b n) for the L2 metric from random data.
std::pair<Vec, Vec> random_orthonormal(std::mt19937_64& rng, const ArcData& d, const Vec& weight) {
    const int n = int(d.ds.size());
    auto ip = [&](const Vec& x, const Vec& y) { return (x.array() * y.array() * d.ds.array() * weight.array()).sum(); };
    Vec a = oracle::random_field(rng, n, 1, 6).col(0), b = oracle::random_field(rng, n, 1, 6).col(0);
    a /= std::sqrt(ip(a, a));
    b -= ip(a, b) * a;
    b /= std::sqrt(ip(b, b));
    return {a, b};
}
}  // namespace

TEST(L2Curvature, AnalyticCircleValue) {
    Curve c = circle(256);
    Vec a(256), b(256);
    for (int j = 0; j < 256; ++j) {
        a[j] = std::cos(dtheta(256) * j) / std::sqrt(pi);
        b[j] = std::sin(dtheta(256) * j) / std::sqrt(pi);
    }
    EXPECT_NEAR(l2_sectional_curvature(c, a, b), 1 / pi, 1e-8);
    EXPECT_NEAR(l2_sectional_curvature(roll(c, 31), roll(a, 31), roll(b, 31)), 1 / pi, 1e-8);
}

TEST(L2Curvature, ProportionalFieldsGiveZeroForm) {
    std::mt19937_64 rng(10);
    Curve c = oracle::random_curve(rng, 128);
    Vec a = oracle::random_field(rng, 128, 1).col(0);
    EXPECT_NEAR(l2_curvature_form(c, a, 3.0 * a), 0.0, 1e-20);
    EXPECT_THROW(l2_sectional_curvature(c, a, 3.0 * a), PreconditionError);
}

TEST(L2Curvature, NonNegativeOnRandomPairs) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
        Curve c = t % 3 ? oracle::random_curve(rng, 128) : circle(128, 1.3);
        ArcData d = arclength_data(c);
        auto [a, b] = random_orthonormal(rng, d, Vec::Ones(128));
        EXPECT_GE(l2_sectional_curvature(c, a, b), 0.0);
    }
}

TEST(L2Curvature, GramSchmidtWindow) {
    Curve c = circle(128);
    Vec a(128), b(128);
    for (int j = 0; j < 128; ++j) {
        a[j] = std::cos(dtheta(128) * j) / std::sqrt(pi);
        b[j] = std::sin(dtheta(128) * j) / std::sqrt(pi);
    }
    EXPECT_NEAR(l2_sectional_curvature(c, a * (1 + 1e-4), b + 1e-4 * a), 1 / pi, 1e-10);
    EXPECT_THROW(l2_sectional_curvature(c, a * 1.1, b), PreconditionError);
}

TEST(GACurvature, ReducesToL2AtZeroWeight) {
    std::mt19937_64 rng(12);
    Curve c = circle(128);
    ArcData d = arclength_data(c);
    auto [a, b] = random_orthonormal(rng, d, Vec::Ones(128));
    EXPECT_NEAR(ga_sectional_curvature(c, a, b, 0.0), l2_sectional_curvature(c, a, b), 1e-12);
}

TEST(GACurvature, ProportionalPairVanishes) {
    std::mt19937_64 rng(13);
    Curve c = oracle::random_curve(rng, 128);
    Vec a = oracle::random_field(rng, 128, 1).col(0);
    EXPECT_NEAR(ga_curvature_form(c, a, -2.0 * a, 1.0), 0.0, 1e-18);
}

TEST(GACurvature, OscillatoryPairTurnsNegative) {
    const int n = 256;
    Curve c = circle(n);
    ArcData d = arclength_data(c);
    Vec psi = Vec::Constant(n, 2.0);  // 1 + A kappa^2 with A = 1
    Vec a(n), b(n);
    for (int j = 0; j < n; ++j) {
        a[j] = std::cos(dtheta(n) * j);
        b[j] = std::sin(8 * dtheta(n) * j);
    }
    auto ip = [&](const Vec& x, const Vec& y) { return (psi.array() * x.array() * y.array() * d.ds.array()).sum(); };
    a /= std::sqrt(ip(a, a));
    b -= ip(a, b) * a;
    b /= std::sqrt(ip(b, b));
    EXPECT_LT(ga_sectional_curvature(c, a, b, 1.0), 0.0);
    // low frequencies keep it positive
    Vec b1(n);
    for (int j = 0; j < n; ++j) b1[j] = std::sin(dtheta(n) * j);
    b1 /= std::sqrt(ip(b1, b1));
    EXPECT_GT(ga_sectional_curvature(c, a, b1, 1.0), 0.0);
}

TEST(Momenta, TrivialValues) {
    Curve c = circle(64);
    Vec psi = Vec::Ones(64), mu = Vec::Ones(64);
    Momenta z = conserved_momenta(psi, c, Mat::Zero(64, 2), mu);
    EXPECT_EQ(z.linear.norm() + std::abs(z.angular) + std::abs(z.scaling) + std::abs(z.reparam), 0.0);
    Momenta r = conserved_momenta(psi, c, J(c), mu);
    EXPECT_LT(r.linear.norm(), 1e-13);
    EXPECT_NEAR(r.angular, 2 * pi, 1e-12);
    EXPECT_NEAR(r.scaling, 0.0, 1e-13);
    Momenta s = conserved_momenta(psi, c, c, mu);
    EXPECT_NEAR(s.scaling, 2 * pi, 1e-12);
}

TEST(Reparametrize, ConstantSpeedKeepsShape) {
    Curve c = ellipse(128, 1.0, 0.5, 0.2, -0.1);
    Curve u = constant_speed(c);
    ArcData a = arclength_data(u);
    EXPECT_LT((a.speed.array() - a.speed.mean()).abs().maxCoeff(), 1e-8);
    EXPECT_NEAR(a.length, arclength_data(c).length, 1e-10);
    for (int j = 0; j < 128; ++j) {
        double x = u(j, 0) - 0.2, y = u(j, 1) + 0.1;
        EXPECT_NEAR(x * x + y * y / 0.25, 1.0, 1e-9);
    }
    EXPECT_LT((u.row(0) - c.row(0)).norm(), 1e-12);
}
