#pragma once

// Random linear and affine systems with well-separated spectra, for the
// round-trip property checks.

#include "oracles.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace gen {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct System {
    Mat a;
    Vec x0;
    bool complex_pair = false;
};

inline Mat random_similarity(std::mt19937_64& rng, int n, double max_cond) {
    std::normal_distribution<double> nd(0.0, 1.0);
    while (true) {
        Mat s(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s(i, j) = nd(rng);
        const Eigen::JacobiSVD<Mat> svd(s);
        const auto& sv = svd.singularValues();
        if (sv[n - 1] > 0.0 && sv[0] / sv[n - 1] < max_cond) return s;
    }
}

/// A = S D S^-1 with D block diagonal: distinct real eigenvalues in
/// [-1.5, 1.5] at least `margin` apart, or (for complex = true) one rotation
/// block with angle in [margin, pi - margin] and the rest real.
inline System random_system(std::mt19937_64& rng, int n, bool complex, double margin = 1e-3) {
    std::uniform_real_distribution<double> real_ev(-1.5, 1.5);
    std::uniform_real_distribution<double> angle(std::max(margin, 0.05), M_PI - std::max(margin, 0.05));
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat d = Mat::Zero(n, n);
    int k = 0;
    if (complex) {
        const double re = real_ev(rng) * 0.5, im = angle(rng);
        d(0, 0) = re;
        d(1, 1) = re;
        d(0, 1) = -im;
        d(1, 0) = im;
        k = 2;
    }
    std::vector<double> reals;
    while (k < n) {
        const double v = real_ev(rng);
        bool ok = std::abs(v) >= margin;
        for (double r : reals) ok = ok && std::abs(v - r) >= std::max(margin, 0.05);
        if (complex) ok = ok && std::abs(v - d(0, 0)) >= margin;
        if (!ok) continue;
        reals.push_back(v);
        d(k, k) = v;
        ++k;
    }
    const Mat s = random_similarity(rng, n, 20.0);
    System sys;
    sys.a = s * d * s.inverse();
    sys.complex_pair = complex;
    // Starting vectors whose Krylov data matrix is comfortably invertible.
    while (true) {
        Vec x0(n);
        for (int i = 0; i < n; ++i) x0[i] = nd(rng);
        Mat x(n, n);
        const Mat step = oracle::expm(sys.a);
        Vec xi = x0;
        for (int j = 0; j < n; ++j) {
            x.col(j) = xi;
            xi = step * xi;
        }
        const Eigen::JacobiSVD<Mat> svd(x);
        const auto& sv = svd.singularValues();
        if (sv[n - 1] > 1e-3 * sv[0]) {
            sys.x0 = x0;
            return sys;
        }
    }
}

/// x0, e^A x0, ..., e^{(count-1) A} x0.
inline std::vector<Vec> samples(const Mat& a, const Vec& x0, int count) {
    std::vector<Vec> out;
    const Mat step = oracle::expm(a);
    Vec x = x0;
    for (int k = 0; k < count; ++k) {
        out.push_back(x);
        x = step * x;
    }
    return out;
}

} // namespace gen
