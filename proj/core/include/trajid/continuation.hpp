#pragma once

// Pseudo-arclength continuation of inverse-problem solutions along a data
// coordinate or a family parameter, fold detection and refinement, two-
// parameter fold curves and curves of vanishing parameters.

#include "trajid/shooting.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trajid::continuation {

using shooting::InverseProblem;
using shooting::Point;
using shooting::Vec4;

enum class Control { X2, Y2, FamilyParam };

std::string_view to_string(Control c) noexcept;

/// Stalled: along a two-parameter curve, P2 stays put while the parameters
/// keep moving (the curve crawls through a degenerate point).
enum class Event { None, Fold, Blowup, ControlLimit, StepFailure, StateLimit, Stalled };

std::string_view to_string(Event e) noexcept;

struct StepPolicy {
    double initial_step = 0.01;
    /// Step bounds are relative to max(1, |theta|), so branches whose
    /// parameters diverge still reach the blow-up threshold in finitely many
    /// steps.
    double min_step = 1e-6;
    double max_step = 0.1;
    double grow = 1.3;
    int grow_after = 3;
    int max_halvings = 10;
    double blowup = 1e6;
    bool stop_at_fold = false;
    std::size_t max_states = 20000;
    /// Corrector convergence: ||R|| <= corrector_tol * scale.
    double corrector_tol = 1e-10;
    int corrector_iterations = 12;
    double integration_tol = 1e-11;
    /// Minimum cosine between consecutive tangents; sharper turns shrink the
    /// step to avoid jumping between branches.
    double min_tangent_cos = 0.9;
};

struct BranchState {
    double control = 0.0;
    Point p2;
    lv::LVParams params;
    double arclength = 0.0;
    double residual = 0.0;
    Event event = Event::None;
};

struct SolutionBranch {
    InverseProblem problem; // data at the start state
    Control control = Control::Y2;
    std::vector<BranchState> states;
    /// Unit tangents in (control, alpha1, beta1, beta2, alpha2), one per state.
    std::vector<Eigen::Matrix<double, 5, 1>> tangents;
    Event terminal = Event::None;
    std::string detail;
};

struct FoldPoint {
    double control = 0.0;
    Point p2;
    lv::LVParams params;
    Eigen::Matrix<double, 5, 1> tangent = Eigen::Matrix<double, 5, 1>::Zero();
};

/// Problem whose control coordinate is set to `value`.
InverseProblem with_control(const InverseProblem& problem, Control control, double value);
double control_value(const InverseProblem& problem, Control control);

/// Continues from `start` (a solution of `problem`) with the control moving
/// initially in `direction` (+1 or -1) until it leaves [lo, hi], parameters
/// exceed the blow-up threshold, a fold is met with stop_at_fold, or the step
/// size underflows.
SolutionBranch continue_branch(const InverseProblem& problem, const Vec4& start, Control control, double lo, double hi,
                               int direction, const StepPolicy& policy = {});

/// Folds where the control component of the tangent changes sign, refined by
/// bisection to 1e-8 in the control.
std::vector<FoldPoint> detect_fold(const SolutionBranch& branch);

struct Box {
    double x_lo = 0.1, x_hi = 10.0, y_lo = 0.1, y_hi = 10.0;
    [[nodiscard]] bool contains(const Point& p) const {
        return p.x() >= x_lo && p.x() <= x_hi && p.y() >= y_lo && p.y() <= y_hi;
    }
};

struct CurvePoint {
    Point p2;
    lv::LVParams params;
};

struct Curve {
    std::string label;
    /// One polyline per traced branch.
    std::vector<std::vector<CurvePoint>> branches;
    Event terminal_forward = Event::None;
    Event terminal_backward = Event::None;
};

/// Traces the fold curve through `fold` (found on a one-parameter slice of
/// `problem`) in the (x2, y2) plane, in both directions, until it leaves
/// `box`. Throws
/// LossOfFold when the fold condition cannot be established at the start.
Curve continue_fold(const InverseProblem& problem, const FoldPoint& fold, const Box& box, const std::string& label,
                    const StepPolicy& policy = {});

enum class ZeroParameter { Alpha1, Beta1, Beta2, Alpha2 };

/// Traces the set of P2 whose solution has the given parameter equal to zero,
/// starting from a solution `start` at `problem.p2` (that parameter must
/// already vanish there), in both directions until leaving `box`.
Curve trace_zero_curve(const InverseProblem& problem, const Vec4& start, ZeroParameter which, const Box& box,
                       const std::string& label, const StepPolicy& policy = {});

} // namespace trajid::continuation
