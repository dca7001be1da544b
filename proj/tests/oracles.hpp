#pragma once

// Independent reference computations for the tests: a fixed-step classical
// Runge-Kutta integrator, the Lotka-Volterra right-hand sides written out
// directly, and closed-form affine trajectories via Eigen's matrix functions.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <functional>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rhs = std::function<Vec(const Vec&)>;

inline Vec rk4(const Rhs& f, Vec x, double t_end, int steps) {
    const double h = t_end / steps;
    for (int k = 0; k < steps; ++k) {
        const Vec k1 = f(x);
        const Vec k2 = f(x + 0.5 * h * k1);
        const Vec k3 = f(x + 0.5 * h * k2);
        const Vec k4 = f(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

// kind: 0 plain, 1 rotated by p, 2 saturated with eps.
inline Rhs lotka_volterra(double a1, double b1, double b2, double a2, int kind = 0, double param = 0.0) {
    return [=](const Vec& s) {
        const double x = s[0], y = s[1];
        const double g = kind == 2 ? x * y / (param * x + 1.0) : x * y;
        const double u = a1 * x + b1 * g;
        const double v = b2 * g + a2 * y;
        Vec out(2);
        if (kind == 1) {
            out << u - param * v, v + param * u;
        } else {
            out << u, v;
        }
        return out;
    };
}

inline Eigen::Vector2d lv_at(double a1, double b1, double b2, double a2, const Eigen::Vector2d& x0, double t,
                             int kind = 0, double param = 0.0, int steps_per_unit = 20000) {
    const int steps = std::max(1, static_cast<int>(std::ceil(t * steps_per_unit)));
    return rk4(lotka_volterra(a1, b1, b2, a2, kind, param), x0, t, steps);
}

/// x(t) for x' = A x + c from x0, through the augmented matrix exponential.
inline Vec affine_at(const Mat& a, const Vec& c, const Vec& x0, double t) {
    const int n = static_cast<int>(a.rows());
    Mat aug = Mat::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = a;
    aug.topRightCorner(n, 1) = c;
    Vec z(n + 1);
    z << x0, 1.0;
    const Mat e = (aug * t).exp();
    return (e * z).head(n);
}

inline Mat expm(const Mat& m) { return m.exp(); }
inline Mat logm(const Mat& m) { return m.log(); }

inline double rel_err(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

} // namespace oracle
