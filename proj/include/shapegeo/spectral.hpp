#pragma once
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "errors.hpp"

namespace shapegeo::spectral {

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using cd = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

// Signed wave number of FFT bin j for length n.
inline int wavenumber(int j, int n) { return j <= n / 2 ? j : j - n; }

inline CVec fft(const Vec& f) {
    Eigen::FFT<double> t;
    CVec out;
    t.fwd(out, f);
    return out;
}

inline Vec ifft(const CVec& F) {
    Eigen::FFT<double> t;
    Vec out;
    t.inv(out, F);
    return out;
}

// Derivative of the given order; the Nyquist mode is dropped so the
// first-derivative matrix is exactly skew.
inline Vec deriv(const Vec& f, int order = 1) {
    const int n = int(f.size());
    if (n % 2) throw DomainError("spectral differentiation needs an even sample count");
    CVec F = fft(f);
    for (int j = 0; j < n; ++j) {
        int k = wavenumber(j, n);
        if (j == n / 2) {
            F[j] = 0.0;
            continue;
        }
        cd m = std::pow(cd(0.0, double(k)), order);
        F[j] *= m;
    }
    return ifft(F);
}

inline Mat deriv_cols(const Mat& c, int order = 1) {
    Mat out(c.rows(), c.cols());
    for (Eigen::Index j = 0; j < c.cols(); ++j) out.col(j) = deriv(c.col(j), order);
    return out;
}

// Central-difference fallback on the uniform grid of spacing 2*pi/n.
inline Vec deriv_fd(const Vec& f, int order = 1) {
    const int n = int(f.size());
    const double h = 2 * pi / n;
    Vec out(n);
    for (int i = 0; i < n; ++i) {
        double fm = f[(i + n - 1) % n], fp = f[(i + 1) % n];
        out[i] = order == 1 ? (fp - fm) / (2 * h) : (fp - 2 * f[i] + fm) / (h * h);
    }
    if (order > 2) return deriv_fd(deriv_fd(f, order - 2), 2);
    return out;
}

// Two-thirds rule: zero every mode with |k| > n/3.
inline Vec dealias(const Vec& f) {
    const int n = int(f.size());
    CVec F = fft(f);
    for (int j = 0; j < n; ++j)
        if (3 * std::abs(wavenumber(j, n)) > n) F[j] = 0;
    return ifft(F);
}

// Antiderivative F with F(0) = 0, sampled at theta_j = 2*pi*j/n for j = 0..n
// (n + 1 values). The mean of f contributes the linear part.
inline Vec antideriv(const Vec& f) {
    const int n = int(f.size());
    CVec F = fft(f);
    const double mean = F[0].real() / n;
    F[0] = 0.0;
    for (int j = 1; j < n; ++j) {
        int k = wavenumber(j, n);
        if (j == n / 2) {
            F[j] = 0.0;
            continue;
        }
        F[j] /= cd(0.0, double(k));
    }
    Vec p = ifft(F);
    Vec out(n + 1);
    const double h = 2 * pi / n;
    for (int j = 0; j <= n; ++j) out[j] = p[j % n] - p[0] + mean * h * j;
    return out;
}

// Trigonometric interpolation of periodic nodal data at an arbitrary angle.
inline double interpolate(const CVec& F, double x) {
    const int n = int(F.size());
    double s = F[0].real();
    for (int j = 1; j < n / 2; ++j) {
        cd e = std::polar(1.0, j * x);
        s += 2.0 * (F[j] * e).real();
    }
    if (n % 2 == 0) s += (F[n / 2] * std::polar(1.0, (n / 2) * x)).real();
    return s / n;
}

}  // namespace shapegeo::spectral
