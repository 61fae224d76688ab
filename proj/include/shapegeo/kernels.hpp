#pragma once
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace shapegeo {

// Green's function of the Weil-Petersson inertia operator on the circle:
// (1 - cos t) log(2(1 - cos t)) + 3/2 cos t - 1, equal to 1/2 at t = 0.
inline double wp_green(double theta) {
    if (std::abs(std::remainder(theta, 2 * std::numbers::pi)) < 1e-8) return 0.5;
    const double s = std::sin(0.5 * theta);
    const double u = 2.0 * s * s;  // 1 - cos
    return u * std::log(2.0 * u) + 1.5 * std::cos(theta) - 1.0;
}

inline double wp_green_prime(double theta) {
    const double s = std::sin(0.5 * theta);
    const double u = 2.0 * s * s;
    if (u < 1e-300) return 0.0;
    return std::sin(theta) * (std::log(2.0 * u) - 0.5);
}

enum class KernelFamily { Gaussian, SobolevBessel, WeilPetersson };

struct Kernel {
    KernelFamily family = KernelFamily::Gaussian;
    double sigma = 1.0;  // length scale (Gaussian width, Bessel scale)
    int order = 2;       // Sobolev order k
    int dim = 2;         // ambient dimension d

    static Kernel gaussian(double sigma, int dim) {
        if (!(sigma > 0)) throw DomainError("Gaussian width must be positive");
        return {KernelFamily::Gaussian, sigma, 0, dim};
    }
    // Matern-type kernel of the operator (Id - Laplacian)^k on R^d, rescaled to unit diagonal.
    static Kernel sobolev_bessel(int k, int dim, double scale = 1.0) {
        if (2 * k <= dim) throw DomainError("Sobolev kernel needs 2k > d");
        return {KernelFamily::SobolevBessel, scale, k, dim};
    }
    static Kernel weil_petersson() { return {KernelFamily::WeilPetersson, 1.0, 0, 1}; }

    double nu() const { return order - 0.5 * dim; }

    std::string name() const {
        switch (family) {
            case KernelFamily::Gaussian: return "gaussian";
            case KernelFamily::SobolevBessel: return "sobolev_bessel";
            default: return "weil_petersson";
        }
    }

    // Radial profile phi(r) with K(x, y) = phi(|x - y|) Id, and its first two derivatives.
    // For WeilPetersson r is the signed angle difference.
    double profile(double r) const {
        switch (family) {
            case KernelFamily::Gaussian: return std::exp(-r * r / (2 * sigma * sigma));
            case KernelFamily::SobolevBessel: {
                const double x = std::abs(r) / sigma, v = nu();
                if (x < 1e-12) return 1.0;
                return std::pow(x, v) * std::cyl_bessel_k(v, x) / bessel_norm();
            }
            default: return wp_green(r);
        }
    }
    double profile_d1(double r) const {
        switch (family) {
            case KernelFamily::Gaussian: return -r / (sigma * sigma) * profile(r);
            case KernelFamily::SobolevBessel: {
                const double x = std::abs(r) / sigma, v = nu();
                if (x < 1e-12) return 0.0;
                double d = -std::pow(x, v) * bessel_k(v - 1, x) / bessel_norm() / sigma;
                return r < 0 ? -d : d;
            }
            default: return wp_green_prime(r);
        }
    }
    double profile_d2(double r) const {
        switch (family) {
            case KernelFamily::Gaussian: {
                const double s2 = sigma * sigma;
                return (r * r / (s2 * s2) - 1.0 / s2) * profile(r);
            }
            case KernelFamily::SobolevBessel: {
                const double x = std::abs(r) / sigma, v = nu();
                if (x < 1e-8) return -radial_ratio_at_zero() / (sigma * sigma);
                return (std::pow(x, v) * bessel_k(v - 2, x) - std::pow(x, v - 1) * bessel_k(v - 1, x)) /
                       bessel_norm() / (sigma * sigma);
            }
            default: {
                const double s = std::sin(0.5 * r), u = 2 * s * s;
                if (u < 1e-300) throw DomainError("Weil-Petersson kernel has no second derivative at 0");
                return std::cos(r) * (std::log(2 * u) - 0.5) + std::sin(r) * std::sin(r) / u;
            }
        }
    }
    // phi'(r) / r, finite at r = 0 for kernels that are C^2.
    double radial_ratio(double r) const {
        switch (family) {
            case KernelFamily::Gaussian: return -profile(r) / (sigma * sigma);
            case KernelFamily::SobolevBessel: {
                const double x = std::abs(r) / sigma, v = nu();
                if (x < 1e-8) return v > 1 ? -radial_ratio_at_zero() / (sigma * sigma) : 0.0;
                return -std::pow(x, v - 1) * bessel_k(v - 1, x) / bessel_norm() / (sigma * sigma);
            }
            default: return std::abs(r) < 1e-300 ? 0.0 : wp_green_prime(r) / r;
        }
    }

    Eigen::MatrixXd eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        return profile(distance(x, y)) * Eigen::MatrixXd::Identity(x.size(), x.size());
    }

    // Derivatives dK/dx_a, one d x d matrix per coordinate a of the first argument.
    std::vector<Eigen::MatrixXd> eval_grad1(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        const Eigen::Index d = x.size();
        std::vector<Eigen::MatrixXd> out;
        Eigen::VectorXd g = grad1_scalar(x, y);
        for (Eigen::Index a = 0; a < d; ++a) out.push_back(g[a] * Eigen::MatrixXd::Identity(d, d));
        return out;
    }

    // Gradient in x of the scalar profile phi(|x - y|).
    Eigen::VectorXd grad1_scalar(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        if (family == KernelFamily::WeilPetersson) {
            Eigen::VectorXd g(1);
            g[0] = wp_green_prime(x[0] - y[0]);
            return g;
        }
        const double r = (x - y).norm();
        return radial_ratio(r) * (x - y);
    }

    double distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        if (family == KernelFamily::WeilPetersson) return x[0] - y[0];
        return (x - y).norm();
    }

private:
    static double bessel_k(double v, double x) { return std::cyl_bessel_k(std::abs(v), x); }
    double bessel_norm() const {
        const double v = nu();
        return std::tgamma(v) * std::pow(2.0, v - 1);
    }
    // -phi''(0) in unit scale, i.e. 1 / (2 (nu - 1)) when nu > 1.
    double radial_ratio_at_zero() const {
        const double v = nu();
        if (v <= 1) throw DomainError("Sobolev kernel is not C^2 for this order and dimension");
        return 1.0 / (2.0 * (v - 1));
    }
};

// Block Gram matrix with landmark-major coordinates: index i*d + a.
inline Eigen::MatrixXd gram_matrix(const Kernel& k, const Eigen::MatrixXd& q) {
    const Eigen::Index n = q.rows(), d = q.cols();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n * d, n * d);
    const double tol = 1e-9 * k.sigma;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            Eigen::VectorXd qi = q.row(i).transpose(), qj = q.row(j).transpose();
            if (i != j && (qi - qj).norm() < tol)
                throw DegenerateConfiguration("landmarks " + std::to_string(i) + " and " +
                                              std::to_string(j) + " coincide");
            Eigen::MatrixXd b = k.eval(qi, qj);
            G.block(i * d, j * d, d, d) = b;
            G.block(j * d, i * d, d, d) = b.transpose();
        }
    }
    return G;
}

}  // namespace shapegeo
