#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shapegeo/kernels.hpp"
#include "shapegeo/numerics.hpp"

using namespace shapegeo;
constexpr double PI = std::numbers::pi;

namespace {
Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

// Truncated Fourier series 2 sum_{n>=2} cos(n t) / (n^3 - n) with a tail estimate below 1e-12.
double wp_series(double t) {
    double s = 0;
    for (int n = 2; n < 200000; ++n) s += 2.0 * std::cos(n * t) / (double(n) * n * n - n);
    return s;
}
}  // namespace

TEST(Gaussian, DiagonalAndUnitDistance) {
    Kernel k = Kernel::gaussian(1.0, 2);
    EXPECT_TRUE(k.eval(v2(0.3, 0.4), v2(0.3, 0.4)).isApprox(Mat::Identity(2, 2)));
    Mat m = k.eval(v2(0, 0), v2(0.6, 0.8));
    EXPECT_NEAR(m(0, 0), std::exp(-0.5), 1e-15);
    EXPECT_NEAR(m(0, 0), 0.60653, 1e-5);
    EXPECT_EQ(m(0, 1), 0.0);
}

TEST(Gaussian, GradientMatchesFiniteDifferences) {
    Kernel k = Kernel::gaussian(1.0, 2);
    Vec x = v2(0.1, -0.3), y = v2(0.1 + 0.6, -0.3 + 0.8);
    auto g = k.eval_grad1(x, y);
    Vec fd = finite_diff_gradient([&](const Vec& z) { return k.eval(z, y)(0, 0); }, x, 1e-6);
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(g[a](0, 0), fd[a], 1e-6 * std::abs(fd[a]));
    auto g0 = k.eval_grad1(x, x);
    EXPECT_EQ(g0[0].norm() + g0[1].norm(), 0.0);
}

TEST(Gaussian, SecondDerivative) {
    Kernel k = Kernel::gaussian(0.7, 1);
    for (double r : {0.0, 0.3, 1.1, 2.5}) {
        double h = 1e-4;
        double fd = (k.profile(r + h) - 2 * k.profile(r) + k.profile(r - h)) / (h * h);
        EXPECT_NEAR(k.profile_d2(r), fd, 1e-6);
    }
}

TEST(SobolevBessel, UnitDiagonalAndMaternForms) {
    // k = 1, d = 1 gives exp(-r); k = 2, d = 1 gives (1 + r) exp(-r).
    Kernel a = Kernel::sobolev_bessel(1, 1), b = Kernel::sobolev_bessel(2, 1);
    EXPECT_DOUBLE_EQ(a.profile(0.0), 1.0);
    for (double r : {1e-6, 0.2, 1.0, 3.0}) {
        EXPECT_NEAR(a.profile(r), std::exp(-r), 1e-12);
        EXPECT_NEAR(b.profile(r), (1 + r) * std::exp(-r), 1e-12);
        EXPECT_NEAR(b.profile_d1(r), -r * std::exp(-r), 1e-12);
        EXPECT_NEAR(b.profile_d2(r), (r - 1) * std::exp(-r), 1e-10);
    }
}

TEST(SobolevBessel, DerivativesMatchFiniteDifferences) {
    Kernel k = Kernel::sobolev_bessel(3, 2, 0.8);  // nu = 2, C^3
    EXPECT_DOUBLE_EQ(k.profile(0.0), 1.0);
    for (double r : {0.05, 0.5, 1.3, 4.0}) {
        double h = 1e-5 * std::max(1.0, r);
        EXPECT_NEAR(k.profile_d1(r), (k.profile(r + h) - k.profile(r - h)) / (2 * h), 1e-7);
        EXPECT_NEAR(k.profile_d2(r), (k.profile_d1(r + h) - k.profile_d1(r - h)) / (2 * h), 1e-6);
    }
    // continuity of phi'/r towards 0
    EXPECT_NEAR(k.radial_ratio(1e-9), k.radial_ratio(1e-5), 1e-6);
    Vec x = v2(0.2, 0.1), y = v2(-0.5, 0.9);
    auto g = k.eval_grad1(x, y);
    Vec fd = finite_diff_gradient([&](const Vec& z) { return k.eval(z, y)(0, 0); }, x, 1e-6);
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(g[a](0, 0), fd[a], 1e-6 * std::abs(fd[a]) + 1e-12);
}

TEST(SobolevBessel, RejectsTooLowOrder) { EXPECT_THROW(Kernel::sobolev_bessel(1, 2), DomainError); }

TEST(WeilPetersson, ClosedFormConstants) {
    EXPECT_NEAR(wp_green(0.0), 0.5, 1e-12);
    EXPECT_NEAR(wp_green(PI), 4 * std::log(2.0) - 2.5, 1e-12);
    EXPECT_NEAR(wp_green(PI), 0.27259, 1e-5);
    EXPECT_NEAR(wp_green(1e-9), 0.5, 1e-12);
}

TEST(WeilPetersson, MatchesFourierSeries) {
    for (double t : {0.0, 0.4, 1.7, PI, 4.0}) EXPECT_NEAR(wp_green(t), wp_series(t), 1e-9) << t;
    // alternating series at pi
    double alt = 0;
    for (int n = 2; n < 200000; ++n) alt += 2.0 * ((n % 2) ? -1.0 : 1.0) / (double(n) * n * n - n);
    EXPECT_NEAR(wp_green(PI), alt, 1e-12);
}

TEST(WeilPetersson, SymmetryAndDerivative) {
    for (double t : {0.3, 1.0, 2.2, 3.0}) EXPECT_NEAR(wp_green(t), wp_green(2 * PI - t), 1e-13);
    EXPECT_NEAR(wp_green_prime(PI), 0.0, 1e-14);
    EXPECT_EQ(wp_green_prime(0.0), 0.0);
    Kernel k = Kernel::weil_petersson();
    for (double t : {0.3, 1.0, 2.2, 5.0}) {
        double h = 1e-6;
        double fd = (wp_green(t + h) - wp_green(t - h)) / (2 * h);
        EXPECT_NEAR(k.profile_d1(t), fd, 1e-6 * std::max(1.0, std::abs(fd)));
        double fd2 = (wp_green_prime(t + h) - wp_green_prime(t - h)) / (2 * h);
        EXPECT_NEAR(k.profile_d2(t), fd2, 1e-6 * std::max(1.0, std::abs(fd2)));
    }
}

TEST(Gram, SingleLandmarkIsItsBlock) {
    Kernel k = Kernel::gaussian(1.0, 3);
    Mat q(1, 3);
    q << 0.1, 0.2, 0.3;
    EXPECT_TRUE(gram_matrix(k, q).isApprox(Mat::Identity(3, 3)));
}

TEST(Gram, FarPointsDecouple) {
    Kernel k = Kernel::gaussian(1.0, 2);
    Mat q(2, 2);
    q << 0, 0, 10, 0;
    Mat G = gram_matrix(k, q);
    EXPECT_LT(G.block(0, 2, 2, 2).norm(), 1e-8);
    EXPECT_TRUE(G.isApprox(G.transpose()));
}

TEST(Gram, LandmarkMajorOrdering) {
    Kernel k = Kernel::gaussian(1.0, 2);
    Mat q(2, 2);
    q << 0, 0, 1, 0;
    Mat G = gram_matrix(k, q);
    EXPECT_NEAR(G(0, 2), std::exp(-0.5), 1e-15);  // x-coordinate of landmark 0 with x of landmark 1
    EXPECT_EQ(G(0, 1), 0.0);
    EXPECT_EQ(G(0, 3), 0.0);
}

TEST(Gram, PositiveDefiniteOnRandomConfigurations) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
        Kernel k = t % 2 ? Kernel::gaussian(0.8, 2) : Kernel::sobolev_bessel(2, 2);
        Mat q = oracle::random_matrix(rng, 6, 2);
        Eigen::SelfAdjointEigenSolver<Mat> es(gram_matrix(k, q));
        EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    }
}

TEST(Gram, DuplicatePointsRejected) {
    Kernel k = Kernel::gaussian(1.0, 2);
    Mat q(3, 2);
    q << 0, 0, 1, 1, 0, 1e-12;
    EXPECT_THROW(gram_matrix(k, q), DegenerateConfiguration);
}
