#pragma once

// Newton shooting for the three-point Lotka-Volterra inverse problem: find
// (alpha1, beta1, beta2, alpha2) whose trajectory from P0 passes P1 and P2 at
// the prescribed times. Includes deterministic multi-start, deduplication and
// the canonical representative of rescaled periodic families.

#include "trajid/error.hpp"
#include "trajid/lv_models.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace trajid::shooting {

using lv::Point;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

struct InverseProblem {
    Point p0{1.0, 1.0};
    Point p1{2.0, 1.5};
    Point p2{2.45, 4.0};
    lv::Family family = lv::Family::Plain;
    double family_param = 0.0;
    std::array<double, 3> times{0.0, 1.0, 2.0};

    /// Throws DomainError unless the points lie in the open first quadrant
    /// and the times increase.
    void validate() const;
    /// max(1, largest data coordinate); residual tolerances are relative to it.
    [[nodiscard]] double scale() const;
    [[nodiscard]] lv::LVParams params(const Vec4& theta) const;
};

struct ShootOptions {
    int max_iterations = 100;
    int max_halvings = 30;
    /// Newton stops at ||R|| <= converge_tol * scale.
    double converge_tol = 1e-10;
    /// Independent re-integration must reproduce the data to verify_tol * scale.
    double verify_tol = 1e-8;
    double verify_integration_tol = 1e-13;
    /// Parameter magnitude treated as divergence.
    double blowup = 1e6;
    /// Give up early when the residual has not dropped by this factor within
    /// `stall_window` iterations (0 disables).
    double stall_factor = 0.5;
    int stall_window = 0;
    /// Newton steps are shortened to at most this multiple of max(1, |theta|).
    double max_step_ratio = 4.0;
    /// Integration step budget per trajectory; exceeding it fails the trial.
    std::size_t max_integration_steps = 100000;
};

struct LVSolution {
    lv::LVParams params;
    lv::Signature signature;
    double residual = 0.0;
    /// Full clockwise revolutions before reaching P1 (negative for
    /// counterclockwise travel); periodic solutions only.
    std::optional<int> rotations;
    /// Signed number of turns between the first two passages (positive
    /// clockwise); rotations == floor(turns).
    std::optional<double> turns;
    std::optional<double> period;
    bool canonical = false;
    int iterations = 0;

    [[nodiscard]] Vec4 theta() const { return params.theta(); }
    [[nodiscard]] bool periodic() const { return period.has_value(); }
};

/// "cw<n>" or "ccw<n>" with n the number of turns between the first two
/// passages rounded to the nearest integer; empty for non-periodic solutions.
std::string rotation_label(const LVSolution& sol);

struct ShootOutcome {
    std::optional<LVSolution> solution;
    /// Set on failure: NoConvergence or IntegrationBlowup.
    std::optional<ErrorCode> failure;
    std::string message;
    Vec4 last_theta = Vec4::Zero();
    double last_residual = 0.0;
    int iterations = 0;
};

/// Residual R = (phi(t1) - P1, phi(t2) - P2) and its Jacobians, integrated
/// with the given tolerance. `family_column` is dR/d(p or eps).
struct ResidualEval {
    Vec4 residual = Vec4::Zero();
    Mat4 jac_theta = Mat4::Zero();
    Vec4 family_column = Vec4::Zero();
};

ResidualEval evaluate_residual(const InverseProblem& problem, const Vec4& theta, double integration_tol,
                               bool with_family_column = false, std::size_t max_steps = 100000);
Vec4 residual_only(const InverseProblem& problem, const Vec4& theta, double integration_tol,
                   std::size_t max_steps = 100000);

/// max_j ||phi(t_j) - P_j|| from a fresh integration at `integration_tol`.
double verify_residual(const InverseProblem& problem, const Vec4& theta, double integration_tol = 1e-13);

ShootOutcome shoot(const InverseProblem& problem, const Vec4& theta0, const ShootOptions& opts = {});

/// Attaches period and rotation count when the (plain) solution lies on a
/// closed orbit; leaves other solutions untouched.
void annotate_periodic(const InverseProblem& problem, LVSolution& sol);

struct Census {
    int seeds = 0;
    int converged = 0;
    int no_convergence = 0;
    int blowup = 0;
    int integration_failure = 0;
    int duplicates = 0;
};

struct SolutionSet {
    std::vector<LVSolution> solutions;
    Census census;
    /// P2 coincides with P0: the solutions form a continuum.
    bool continuum = false;
};

struct MultiStartOptions {
    ShootOptions shoot{};
    /// Budget for the 5^4 lattice seeds, which mostly fail fast.
    ShootOptions lattice_shoot{.max_iterations = 30,
                               .max_halvings = 10,
                               .stall_factor = 0.5,
                               .stall_window = 5,
                               .max_step_ratio = 2.0,
                               .max_integration_steps = 20000};
    bool use_lattice = true;
    bool use_hamiltonian = true;
    /// Extra seeds tried first (e.g. neighbouring solutions).
    std::vector<Vec4> extra_seeds;
    /// Stop after the first verified solution (used for cheap probing).
    bool stop_at_first = false;
    /// Relative dedup radius in parameter space.
    double dedup_radius = 1e-5;
    bool canonicalize = true;
};

/// Deterministic seed list: log-linear quadrature seed, affine-surrogate
/// seed, Hamiltonian seeds and (optionally) the 5^4 sign/magnitude lattice.
std::vector<Vec4> seed_list(const InverseProblem& problem, const MultiStartOptions& opts);

SolutionSet multi_start(const InverseProblem& problem, const MultiStartOptions& opts = {});

/// Members of the rescaled family gamma * A, gamma = (m~ + phase) * signed
/// period, for each requested rotation count m~. Each is re-verified to 1e-7.
std::vector<LVSolution> enumerate_rescales(const InverseProblem& problem, const LVSolution& sol,
                                           const std::vector<int>& rotations);

/// Collapses rescaled periodic families to their canonical member and removes
/// duplicates; non-periodic solutions pass through.
std::vector<LVSolution> canonicalize(const InverseProblem& problem, std::vector<LVSolution> sols,
                                     double dedup_radius = 1e-5);

/// True when P2 lies strictly below the line through P0 and P1.
bool below_line(const Point& p0, const Point& p1, const Point& p2);

} // namespace trajid::shooting
