#include "trajid/lv_models.hpp"

#include "trajid/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace trajid::lv {

namespace {

// Rates (u, v) of the unrotated field and their derivatives. Parameter
// columns: alpha1, beta1, beta2, alpha2, eps.
struct BaseEval {
    double u, v;
    double ux, uy, vx, vy;
    double up[5], vp[5];
};

BaseEval base_eval(double x, double y, const double* th, bool saturated, double eps) {
    const double a1 = th[0], b1 = th[1], b2 = th[2], a2 = th[3];
    double g = x * y, gx = y, gy = x, ge = 0.0;
    if (saturated) {
        const double s = 1.0 / (eps * x + 1.0);
        g = x * y * s;
        gx = y * s * s;
        gy = x * s;
        ge = -x * x * y * s * s;
    }
    BaseEval e{};
    e.u = a1 * x + b1 * g;
    e.v = b2 * g + a2 * y;
    e.ux = a1 + b1 * gx;
    e.uy = b1 * gy;
    e.vx = b2 * gx;
    e.vy = b2 * gy + a2;
    e.up[0] = x;
    e.up[1] = g;
    e.up[4] = b1 * ge;
    e.vp[2] = g;
    e.vp[3] = y;
    e.vp[4] = b2 * ge;
    return e;
}

// Writes the rate and, optionally, Jacobians of the given family. `q` is 4 or
// 5; with 5 the family parameter is theta[4].
void family_eval(Family family, double fixed_param, int q, std::span<const double> x, std::span<const double> theta,
                 double* rate, double* jx, double* jp) {
    const double fp = q == 5 ? theta[4] : fixed_param;
    const bool saturated = family == Family::Saturated;
    const BaseEval e = base_eval(x[0], x[1], theta.data(), saturated, saturated ? fp : 0.0);
    const double p = family == Family::Rotated ? fp : 0.0;
    if (rate) {
        rate[0] = e.u - p * e.v;
        rate[1] = e.v + p * e.u;
    }
    if (jx) {
        jx[0] = e.ux - p * e.vx;
        jx[1] = e.uy - p * e.vy;
        jx[2] = e.vx + p * e.ux;
        jx[3] = e.vy + p * e.uy;
    }
    if (jp) {
        for (int j = 0; j < 4; ++j) {
            jp[j] = e.up[j] - p * e.vp[j];
            jp[q + j] = e.vp[j] + p * e.up[j];
        }
        if (q == 5) {
            switch (family) {
            case Family::Plain:
                jp[4] = 0.0;
                jp[9] = 0.0;
                break;
            case Family::Rotated:
                jp[4] = -e.v;
                jp[9] = e.u;
                break;
            case Family::Saturated:
                jp[4] = e.up[4];
                jp[9] = e.vp[4];
                break;
            }
        }
    }
}

ode::VectorField make_field(Family family, double fixed_param, int q) {
    ode::VectorField f;
    f.dimension = 2;
    f.parameter_count = q;
    f.rate = [=](std::span<const double> x, std::span<const double> th, std::span<double> out) {
        family_eval(family, fixed_param, q, x, th, out.data(), nullptr, nullptr);
    };
    f.state_jacobian = [=](std::span<const double> x, std::span<const double> th, std::span<double> out) {
        family_eval(family, fixed_param, q, x, th, nullptr, out.data(), nullptr);
    };
    f.parameter_jacobian = [=](std::span<const double> x, std::span<const double> th, std::span<double> out) {
        family_eval(family, fixed_param, q, x, th, nullptr, nullptr, out.data());
    };
    return f;
}

void require_positive(const Point& p, const char* what) {
    if (!(p.x() > 0.0) || !(p.y() > 0.0) || !p.allFinite()) {
        throw Error(ErrorCode::DomainError, std::string(what) + " must lie in the open first quadrant");
    }
}

Point swapped(const Point& p) { return {p.y(), p.x()}; }

} // namespace

std::string_view to_string(Family f) noexcept {
    switch (f) {
    case Family::Plain: return "plain";
    case Family::Rotated: return "rotated";
    case Family::Saturated: return "saturated";
    }
    return "?";
}

LVParams LVParams::with_theta(const Eigen::Vector4d& t) const {
    LVParams out = *this;
    out.alpha1 = t[0];
    out.beta1 = t[1];
    out.beta2 = t[2];
    out.alpha2 = t[3];
    return out;
}

std::string Signature::str() const {
    std::string s(4, '0');
    for (int i = 0; i < 4; ++i) s[i] = signs[i] > 0 ? '+' : signs[i] < 0 ? '-' : '0';
    return s;
}

bool Signature::has_zero() const {
    return std::any_of(signs.begin(), signs.end(), [](int v) { return v == 0; });
}

Signature Signature::parse(std::string_view s) {
    if (s.size() != 4) throw Error(ErrorCode::ConfigError, "signature must have four symbols");
    Signature out;
    for (int i = 0; i < 4; ++i) {
        switch (s[i]) {
        case '+': out.signs[i] = 1; break;
        case '-': out.signs[i] = -1; break;
        case '0': out.signs[i] = 0; break;
        default: throw Error(ErrorCode::ConfigError, "signature symbols are +, - or 0");
        }
    }
    return out;
}

Signature signature_of(const Eigen::Vector4d& theta, double tol) {
    Signature s;
    for (int i = 0; i < 4; ++i) s.signs[i] = theta[i] > tol ? 1 : theta[i] < -tol ? -1 : 0;
    return s;
}

Signature signature_of(const LVParams& params, double tol) { return signature_of(params.theta(), tol); }

std::string_view dynamics_type(const Signature& s) {
    const std::string k = s.str();
    if (k == "+--+") return "competitive";
    if (k == "-+-+" || k == "+-+-") return "predator-prey";
    if (k == "++-+" || k == "+-++") return "parasitic";
    if (k == "++++") return "cooperative";
    if (k == "-+++" || k == "+++-") return "cooperative dependency";
    if (k == "-++-") return "codependency";
    return {};
}

std::string_view region_letter(const Signature& s) {
    const std::string k = s.str();
    if (k == "+--+") return "R";
    if (k == "-+-+" || k == "+-+-") return "G";
    if (k == "++-+") return "M";
    if (k == "+-++") return "C";
    if (k == "++++") return "B1";
    if (k == "-+++") return "B2";
    if (k == "+++-") return "B3";
    if (k == "-++-") return "B4";
    return {};
}

ode::VectorField lv_field(Family family, double family_param) {
    if (family == Family::Saturated && !(family_param >= 0.0)) {
        throw Error(ErrorCode::DomainError, "saturation constant must be non-negative");
    }
    return make_field(family, family_param, 4);
}

ode::VectorField lv_field_extended(Family family) { return make_field(family, 0.0, 5); }

double hamiltonian(const LVParams& params, double x, double y) {
    if (params.family != Family::Plain) throw Error(ErrorCode::DomainError, "Hamiltonian needs the plain family");
    if (!(x > 0.0) || !(y > 0.0)) throw Error(ErrorCode::DomainError, "Hamiltonian needs positive coordinates");
    return params.alpha2 * std::log(x) + params.beta2 * x - params.alpha1 * std::log(y) - params.beta1 * y;
}

std::optional<Point> equilibrium(const LVParams& params) {
    if (params.beta1 == 0.0 || params.beta2 == 0.0) return std::nullopt;
    return Point{-params.alpha2 / params.beta2, -params.alpha1 / params.beta1};
}

HamiltonianRatio hamiltonian_ratio(const Point& p0, const Point& p1, double x_star) {
    require_positive(p0, "P0");
    require_positive(p1, "P1");
    const double denom = p1.x() - p0.x() - x_star * std::log(p1.x() / p0.x());
    if (std::abs(denom) <= 1e-12 * std::max({1.0, p0.x(), p1.x()})) {
        throw Error(ErrorCode::DegenerateGeometry, "ratio denominator vanishes");
    }
    HamiltonianRatio out;
    const double dy = p1.y() - p0.y();
    out.r = dy / denom;
    if (dy == 0.0) {
        out.c_bar = std::numeric_limits<double>::quiet_NaN();
    } else {
        out.c_bar = (p0.x() * p1.y() - p0.y() * p1.x()) / dy -
                    x_star * (std::log(p0.x()) * p1.y() - p0.y() * std::log(p1.x())) / dy;
    }
    return out;
}

double beta1_zero_line(const Point& p0, const Point& p1) { return p1.x() * p1.x() / p0.x(); }

double beta2_zero_line(const Point& p0, const Point& p1) { return p1.y() * p1.y() / p0.y(); }

LVParams beta1_zero_solution(const Point& p0, const Point& p1, double y2) {
    require_positive(p0, "P0");
    require_positive(p1, "P1");
    if (!(y2 > 0.0)) throw Error(ErrorCode::DomainError, "y2 must be positive");
    const double x0 = p0.x(), y0 = p0.y(), x1 = p1.x(), y1 = p1.y();
    if (std::abs(x1 - x0) <= 1e-14 * std::max(x0, x1)) {
        throw Error(ErrorCode::DegenerateGeometry, "x0 == x1 admits no beta1 = 0 solution");
    }
    const double lx = std::log(x1 / x0);
    LVParams out;
    out.alpha1 = lx;
    out.beta1 = 0.0;
    out.beta2 = x0 / ((x1 - x0) * (x1 - x0)) * lx * std::log(y0 * y2 / (y1 * y1));
    out.alpha2 = x0 / (x0 - x1) * std::log(y2 / y1) - x1 / (x0 - x1) * std::log(y1 / y0);
    return out;
}

LVParams beta2_zero_solution(const Point& p0, const Point& p1, double x2) {
    const LVParams m = beta1_zero_solution(swapped(p0), swapped(p1), x2);
    LVParams out;
    out.alpha1 = m.alpha2;
    out.beta1 = m.beta2;
    out.beta2 = m.beta1;
    out.alpha2 = m.alpha1;
    return out;
}

Point beta1_alpha2_point(const Point& p0, const Point& p1) {
    require_positive(p0, "P0");
    require_positive(p1, "P1");
    const double a = p1.x() / p0.x();
    return {p1.x() * a, p1.y() * std::pow(p1.y() / p0.y(), a)};
}

Point beta2_alpha1_point(const Point& p0, const Point& p1) { return swapped(beta1_alpha2_point(swapped(p0), swapped(p1))); }

std::optional<Point> alpha_zero_intersection(const Point& p0, const Point& p1) {
    require_positive(p0, "P0");
    require_positive(p1, "P1");
    const double a = p1.x() / p0.x();
    const double b = p1.y() / p0.y();
    const double denom = a + b - a * b;
    if (!(denom > 0.0)) return std::nullopt;
    return Point{p1.x() * a / denom, p1.y() * b / denom};
}

ZeroCurvePoint alpha1_zero_solution(const Point& p0, const Point& p1, double x_star) {
    const HamiltonianRatio hr = hamiltonian_ratio(p0, p1, x_star);
    if (hr.r == 0.0 || !std::isfinite(hr.c_bar)) {
        throw Error(ErrorCode::DegenerateGeometry, "flat orbit: y1 == y0");
    }
    const double c_bar = hr.c_bar;
    auto level = [&](double x) { return x - x_star * std::log(x) - c_bar; };
    auto integrand = [&](double x) { return 1.0 / (x * level(x)); };

    const double x0 = p0.x(), x1 = p1.x();
    // The orbit segment must keep y = r * level(x) away from zero.
    const double span = std::abs(x1 - x0);
    const double lo = std::min(x0, x1), hi = std::max(x0, x1);
    double min_level = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 64; ++i) {
        const double x = lo + (hi - lo) * i / 64.0;
        min_level = std::min(min_level, level(x) * (hr.r > 0 ? 1.0 : -1.0));
    }
    if (!(min_level > 0.0)) throw Error(ErrorCode::SingularIntegrand, "orbit meets y = 0 between x0 and x1");

    using boost::math::quadrature::gauss_kronrod;
    auto quad = [&](double a, double b) {
        double err = 0.0;
        const double v = gauss_kronrod<double, 31>::integrate(integrand, a, b, 15, 1e-12, &err);
        return v;
    };
    const double target = quad(x0, x1);
    if (!std::isfinite(target) || target == 0.0) throw Error(ErrorCode::SingularIntegrand, "degenerate passage integral");

    // Continue in the same direction of travel in x until the accumulated
    // integral matches. The integrand keeps its sign while level(x) does.
    const double dir = x1 > x0 ? 1.0 : -1.0;
    auto residual = [&](double x2) { return quad(x1, x2) - target; };
    auto sign_ok = [&](double x) { return x > 0.0 && level(x) * hr.r > 0.0; };

    double a = x1;
    double step = std::max(span, 1e-3 * x1);
    double b = x1;
    bool bracketed = false;
    for (int k = 0; k < 200; ++k) {
        double cand = dir > 0 ? a + step : std::max(a - step, 0.5 * a);
        if (!sign_ok(cand)) {
            // Bisect towards the zero of level(x) (or x = 0) where the
            // integral diverges; the root lies before it.
            double good = a, bad = cand;
            for (int it = 0; it < 200 && std::abs(bad - good) > 1e-15 * std::abs(good); ++it) {
                const double mid = 0.5 * (good + bad);
                (sign_ok(mid) ? good : bad) = mid;
            }
            cand = good;
            if (residual(cand) * (target > 0 ? 1.0 : -1.0) < 0.0) {
                throw Error(ErrorCode::NoRoot, "passage integral cannot be matched before the orbit leaves the quadrant");
            }
            b = cand;
            bracketed = true;
            break;
        }
        if (residual(cand) * (target > 0 ? 1.0 : -1.0) >= 0.0) {
            b = cand;
            bracketed = true;
            break;
        }
        a = cand;
        step *= 2.0;
        if (!std::isfinite(a) || a > 1e12) break;
    }
    if (!bracketed) throw Error(ErrorCode::NoRoot, "passage integral converges below the target");

    boost::uintmax_t max_iter = 200;
    const auto tol = [](double l, double u) { return std::abs(u - l) <= 1e-14 * std::max(std::abs(l), std::abs(u)); };
    const double fa = residual(a);
    const double fb = residual(b);
    double x2 = b;
    if (fb != 0.0) {
        const auto [l, u] = boost::math::tools::toms748_solve(residual, std::min(a, b), std::max(a, b),
                                                              a < b ? fa : fb, a < b ? fb : fa, tol, max_iter);
        x2 = 0.5 * (l + u);
    }
    // Along the orbit xdot = beta1 * r * x * level(x), so the passage
    // integral equals beta1 * r = beta2.
    ZeroCurvePoint out;
    out.p2 = Point(x2, hr.r * level(x2));
    out.params.alpha1 = 0.0;
    out.params.beta2 = target;
    out.params.beta1 = target / hr.r;
    out.params.alpha2 = -target * x_star;
    return out;
}

ZeroCurvePoint alpha2_zero_solution(const Point& p0, const Point& p1, double y_star) {
    const ZeroCurvePoint m = alpha1_zero_solution(swapped(p0), swapped(p1), y_star);
    ZeroCurvePoint out;
    out.p2 = swapped(m.p2);
    out.params.alpha1 = m.params.alpha2;
    out.params.beta1 = m.params.beta2;
    out.params.beta2 = m.params.beta1;
    out.params.alpha2 = m.params.alpha1;
    return out;
}

Point alpha1_zero_point(const Point& p0, const Point& p1, double x_star) {
    return alpha1_zero_solution(p0, p1, x_star).p2;
}

Point alpha2_zero_point(const Point& p0, const Point& p1, double y_star) {
    return alpha2_zero_solution(p0, p1, y_star).p2;
}

bool orbit_convexity_check(const LVParams& params, const Point& x0, int samples) {
    samples = std::max(samples, 512);
    const ode::VectorField field = lv_field(params);
    const Eigen::Vector4d th4 = params.theta();
    const ode::Vec theta = th4;
    const ode::Vec start = x0;
    ode::PeriodOptions opts;
    const double period = ode::find_period(field, start, theta, opts);
    const ode::Trajectory traj = ode::integrate(field, start, theta, period, opts.integrator);

    std::vector<Point> pts(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) pts[i] = traj.at(period * i / samples);
    Point lo = pts[0], hi = pts[0];
    for (const Point& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double diam = (hi - lo).norm();
    const double tol = 1e-9 * diam * diam;

    int sign = 0;
    double turning = 0.0;
    for (int i = 0; i < samples; ++i) {
        const Point e1 = pts[(i + 1) % samples] - pts[i];
        const Point e2 = pts[(i + 2) % samples] - pts[(i + 1) % samples];
        const double cross = e1.x() * e2.y() - e1.y() * e2.x();
        turning += std::atan2(cross, e1.dot(e2));
        if (std::abs(cross) <= tol) continue;
        const int s = cross > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return std::abs(std::abs(turning) - 2.0 * std::numbers::pi) < 1e-6;
}

} // namespace trajid::lv
