#pragma once

// Exact inverse problems for x' = A x (n+1 samples) and x' = A x + c (n+2
// samples) on equally spaced times, via real logarithms of one-step maps.

#include "trajid/linalg.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace trajid::inverse {

using linalg::Mat;
using linalg::SpectralClass;
using linalg::Vec;

struct TimedDataSet {
    std::vector<Vec> points;
    /// Sample times; empty means 0, 1, 2, ...
    std::vector<double> times;

    [[nodiscard]] int dimension() const;
    [[nodiscard]] double time(std::size_t i) const;
    /// Common spacing; throws NonUniformSpacing when the times are not equally
    /// spaced to 1e-12 relative.
    [[nodiscard]] double spacing() const;
};

enum class Stability { StableNode, UnstableNode, StableSpiral, UnstableSpiral, Saddle, Center, Degenerate };

std::string_view to_string(Stability s) noexcept;

/// Stability of the origin for x' = A x.
Stability stability_of(const Mat& a);

struct LinearSolution {
    Mat a;
    Vec b;
    /// Winding of the first complex eigenvalue pair (0 for real spectra).
    int branch = 0;
    std::vector<int> windings;
    SpectralClass phi_class = SpectralClass::Degenerate;
    Stability stability = Stability::Degenerate;
};

struct LinearReport {
    std::vector<LinearSolution> solutions;
    SpectralClass phi_class = SpectralClass::Degenerate;
    /// Set when the one-step map has a negative eigenvalue of odd multiplicity.
    bool no_real_solution = false;
};

/// One-step map X1 X0^{-1}, X_k = [x_k | ... | x_{k+n-1}].
Mat phi_from_data(const TimedDataSet& d);

LinearReport solve_linear(const TimedDataSet& d, int max_winding = 0);

enum class LinearRegion { DNE, Saddle, StableNode, UnstableNode, StableSpiral, UnstableSpiral, Boundary };

std::string_view to_string(LinearRegion r) noexcept;

/// Region of the plane containing P2 for the planar linear problem with fixed
/// P0, P1.
LinearRegion classify_linear_p2(const Vec& p0, const Vec& p1, const Vec& p2);

/// Solution of the similarity-transformed problem x -> S x.
LinearSolution transform_linear(const LinearSolution& sol, const Mat& s);

enum class AffineRegime {
    StableNode,
    UnstableNode,
    StableSpiral,
    UnstableSpiral,
    Saddle,
    Center,
    River,
    Parabolic,
    Degenerate,
};

std::string_view to_string(AffineRegime r) noexcept;

struct AffineSolution {
    Mat a;
    Vec c;
    Vec b;
    int branch = 0;
    AffineRegime regime = AffineRegime::Degenerate;
};

struct AffineClassification {
    AffineRegime regime = AffineRegime::Degenerate;
    std::optional<Vec> fixed_point;
};

AffineClassification classify_affine_regime(const Mat& a, const Vec& c);
inline AffineClassification classify_affine_regime(const AffineSolution& s) { return classify_affine_regime(s.a, s.c); }

/// Solutions from n+2 samples. Only log branches of the augmented one-step
/// map whose bottom row vanishes are accepted; each is verified by
/// integrating the affine system through the data.
std::vector<AffineSolution> solve_affine(const TimedDataSet& d, int max_winding = 0);

/// Solution of the problem transformed by x -> S x + r.
AffineSolution transform_affine(const AffineSolution& sol, const Mat& s, const Vec& r);

} // namespace trajid::inverse
