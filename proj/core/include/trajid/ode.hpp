#pragma once

// Adaptive trajectory integration with first-order parameter sensitivities
// and section-crossing period detection.

#include "trajid/linalg.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace trajid::ode {

using linalg::Mat;
using linalg::Vec;

/// Right-hand side f(x, theta) together with its exact Jacobians. Jacobian
/// callbacks write row-major n x n (state) and n x q (parameter) blocks.
struct VectorField {
    using Eval = std::function<void(std::span<const double> x, std::span<const double> theta, std::span<double> out)>;

    int dimension = 0;
    int parameter_count = 0;
    Eval rate;
    Eval state_jacobian;
    Eval parameter_jacobian;
};

struct Tolerance {
    double absolute = 1e-10;
    double relative = 1e-10;
};

struct IntegratorOptions {
    Tolerance tol{};
    double min_step = 1e-14;
    /// Largest admissible max-norm of the state before StateBlowup.
    double blowup_norm = 1e12;
    std::size_t max_steps = 400000;
    /// 0 selects the starting step automatically.
    double initial_step = 0.0;
};

/// Dense-output trajectory over [0, t_end].
class Trajectory {
public:
    Trajectory() = default;

    [[nodiscard]] int dimension() const noexcept { return n_; }
    [[nodiscard]] double t_end() const noexcept { return times_.empty() ? 0.0 : times_.back(); }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
    [[nodiscard]] Vec state(std::size_t i) const;
    [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
    [[nodiscard]] Tolerance tolerance() const noexcept { return tol_; }

    /// State at an arbitrary t in [0, t_end] from the pair's interpolant.
    [[nodiscard]] Vec at(double t) const;

private:
    friend Trajectory integrate(const VectorField&, const Vec&, const Vec&, double, const IntegratorOptions&);

    int n_ = 0;
    Tolerance tol_{};
    std::vector<double> times_;   // accepted step endpoints, times_[0] = 0
    std::vector<double> states_;  // (steps+1) * n
    std::vector<double> coeffs_;  // steps * 5n dense-output coefficients
};

struct SensitivityBundle {
    std::vector<double> times;
    std::vector<Vec> states;
    /// dx(t)/dtheta, n x q, at each sample time.
    std::vector<Mat> sensitivities;
};

Trajectory integrate(const VectorField& field, const Vec& x0, const Vec& theta, double t_end,
                     const IntegratorOptions& opts = {});

/// States at the requested (increasing, non-negative) times; steps land on
/// each sample time exactly.
std::vector<Vec> integrate_samples(const VectorField& field, const Vec& x0, const Vec& theta,
                                   std::span<const double> sample_times, const IntegratorOptions& opts = {});

/// Jointly integrates dS/dt = (df/dx) S + df/dtheta with S(0) = 0; the
/// sensitivities take part in step-size control.
SensitivityBundle integrate_with_sensitivities(const VectorField& field, const Vec& x0, const Vec& theta,
                                               std::span<const double> sample_times,
                                               const IntegratorOptions& opts = {});

/// Time of the first upward crossing of the hyperplane {y : normal . (y - point) = 0}
/// with t in (0, t_max]. With `after_downward` the crossing only counts once
/// the trajectory has been strictly below the plane. Crossing times are
/// bisected on the dense output to `time_tol`.
std::optional<double> first_upward_crossing(const VectorField& field, const Vec& x0, const Vec& theta,
                                            const Vec& point, const Vec& normal, double t_max, bool after_downward,
                                            const IntegratorOptions& opts, double time_tol = 1e-12);

struct PeriodOptions {
    IntegratorOptions integrator{Tolerance{1e-12, 1e-12}};
    double max_time = 1e3;
    double return_tol = 1e-8;
};

/// Period of the orbit through x0, from the second same-direction crossing of
/// the hyperplane through x0 orthogonal to f(x0). Throws NotPeriodic.
double find_period(const VectorField& field, const Vec& x0, const Vec& theta, const PeriodOptions& opts = {});

/// One full period of the orbit through x0 (find_period followed by a dense
/// integration over [0, T]).
Trajectory integrate_until_return(const VectorField& field, const Vec& x0, const Vec& theta, double period,
                                  const IntegratorOptions& opts = {});

} // namespace trajid::ode
