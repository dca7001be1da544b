#pragma once

// Lotka-Volterra vector fields (plain, rotated, saturated), sign signatures,
// the Hamiltonian of the plain system and closed-form boundary objects of the
// three-point inverse problem.

#include "trajid/ode.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace trajid::lv {

using Point = Eigen::Vector2d;

enum class Family { Plain, Rotated, Saturated };

std::string_view to_string(Family f) noexcept;

/// x' = alpha1 x + beta1 g,  y' = beta2 g + alpha2 y  with g = xy (plain,
/// rotated) or xy/(eps x + 1) (saturated). The rotated family turns the plain
/// field (u, v) into (u - p v, v + p u).
struct LVParams {
    double alpha1 = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double alpha2 = 0.0;
    Family family = Family::Plain;
    /// p for Rotated, eps for Saturated, ignored for Plain.
    double family_param = 0.0;

    /// (alpha1, beta1, beta2, alpha2).
    [[nodiscard]] Eigen::Vector4d theta() const { return {alpha1, beta1, beta2, alpha2}; }
    [[nodiscard]] LVParams with_theta(const Eigen::Vector4d& t) const;
    [[nodiscard]] double max_abs() const { return theta().cwiseAbs().maxCoeff(); }
};

/// Zero threshold for signature symbols.
inline constexpr double kSignTolerance = 1e-9;

struct Signature {
    std::array<int, 4> signs{}; // -1, 0, +1 for alpha1, beta1, beta2, alpha2

    /// Four characters over {+, -, 0}.
    [[nodiscard]] std::string str() const;
    [[nodiscard]] bool has_zero() const;
    auto operator<=>(const Signature&) const = default;

    static Signature parse(std::string_view s);
};

Signature signature_of(const LVParams& params, double tol = kSignTolerance);
Signature signature_of(const Eigen::Vector4d& theta, double tol = kSignTolerance);

/// Interaction type of a signature ("competitive", "predator-prey", ...);
/// empty for signatures with zeros or no named type.
std::string_view dynamics_type(const Signature& s);

/// Single-letter region code of a zero-free signature: R, G, M, C, B1..B4;
/// empty when the signature has no region of its own.
std::string_view region_letter(const Signature& s);

/// Field with parameter vector (alpha1, beta1, beta2, alpha2) and the family
/// parameter held fixed.
ode::VectorField lv_field(Family family, double family_param = 0.0);
inline ode::VectorField lv_field(const LVParams& p) { return lv_field(p.family, p.family_param); }

/// Field with parameter vector (alpha1, beta1, beta2, alpha2, family_param), so
/// sensitivities include the derivative with respect to p or eps.
ode::VectorField lv_field_extended(Family family);

double hamiltonian(const LVParams& params, double x, double y);

/// Interior equilibrium (-alpha2/beta2, -alpha1/beta1); nullopt when
/// beta1 * beta2 == 0.
std::optional<Point> equilibrium(const LVParams& params);

struct HamiltonianRatio {
    double r = 0.0;
    /// Level constant of y = r (x - x* ln x - c_bar); NaN when y1 == y0.
    double c_bar = 0.0;
};

/// beta2/beta1 on an orbit of the alpha1 = 0 system through P0 and P1 with
/// x* = -alpha2/beta2.
HamiltonianRatio hamiltonian_ratio(const Point& p0, const Point& p1, double x_star);

/// x coordinate of the vertical line of data points reachable with beta1 = 0.
double beta1_zero_line(const Point& p0, const Point& p1);
/// y coordinate of the horizontal line of data points reachable with beta2 = 0.
double beta2_zero_line(const Point& p0, const Point& p1);

/// Exact parameters with beta1 = 0 whose trajectory from P0 passes P1 at t=1
/// and (x1^2/x0, y2) at t=2.
LVParams beta1_zero_solution(const Point& p0, const Point& p1, double y2);
/// Mirror image: beta2 = 0, P2 = (x2, y1^2/y0).
LVParams beta2_zero_solution(const Point& p0, const Point& p1, double x2);

/// Where the beta1 = 0 line meets the alpha2 = 0 curve.
Point beta1_alpha2_point(const Point& p0, const Point& p1);
/// Where the beta2 = 0 line meets the alpha1 = 0 curve.
Point beta2_alpha1_point(const Point& p0, const Point& p1);

/// Data point P2 reached with alpha1 = alpha2 = 0; nullopt when the straight
/// line trajectory cannot reach the first quadrant.
std::optional<Point> alpha_zero_intersection(const Point& p0, const Point& p1);

/// A point on the alpha1 = 0 curve, parametrised by x* = -alpha2/beta2: the
/// time-1 passage x1 -> x2 along y = r(x - x* ln x - c_bar) matches x0 -> x1.
Point alpha1_zero_point(const Point& p0, const Point& p1, double x_star);
/// Mirror image on the alpha2 = 0 curve, parametrised by y* = -alpha1/beta1.
Point alpha2_zero_point(const Point& p0, const Point& p1, double y_star);

struct ZeroCurvePoint {
    Point p2;
    LVParams params;
};

/// alpha1_zero_point together with the exact parameters of that trajectory.
ZeroCurvePoint alpha1_zero_solution(const Point& p0, const Point& p1, double x_star);
ZeroCurvePoint alpha2_zero_solution(const Point& p0, const Point& p1, double y_star);

/// True iff at least 512 samples of the periodic orbit through x0 form a
/// convex polygon (cross products of consecutive edges share a sign up to
/// 1e-9 times the squared diameter, with total turning of one revolution).
bool orbit_convexity_check(const LVParams& params, const Point& x0, int samples = 1024);

} // namespace trajid::lv
