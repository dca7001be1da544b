#include "trajid/continuation.hpp"

#include "trajid/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace trajid::continuation {

namespace {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Vec5 = Eigen::Matrix<double, 5, 1>;

// Underdetermined system F: R^n -> R^(n-1) followed by the continuation
// engine. `theta` extracts the model parameters from an unknown vector.
struct System {
    int n = 0;
    std::function<void(const VecX& u, VecX& f, MatX& j)> eval;
    std::function<Vec4(const VecX& u)> theta;
    double scale = 1.0; // residual scale of the data
};

struct Landing {
    int index;
    double value;
};

struct Hooks {
    /// Coordinate whose tangent component changing sign marks a fold (-1: none).
    int fold_index = -1;
    /// Returns a landing constraint when u has left the admissible domain.
    std::function<std::optional<Landing>(const VecX& u)> outside;
    /// When > 0, the first two coordinates are a data point; the run stops
    /// once it has moved less than stall_tol over the last stall_window points.
    int stall_window = 0;
    double stall_tol = 0.0;
};

struct PalcPoint {
    VecX u;
    VecX t;
    double residual = 0.0;
    Event event = Event::None;
};

struct PalcResult {
    std::vector<PalcPoint> points;
    Event terminal = Event::None;
    std::string detail;
};

double size_of(const System& sys, const VecX& u) { return std::max(1.0, sys.theta(u).norm()); }

VecX tangent_of(const MatX& j, const VecX& orient) {
    const Eigen::JacobiSVD<MatX> svd(j, Eigen::ComputeFullV);
    VecX t = svd.matrixV().col(j.cols() - 1);
    if (orient.size() == t.size() && t.dot(orient) < 0.0) t = -t;
    return t;
}

// Newton on [F(u); constraint(u)] = 0. The constraint is either the
// arclength hyperplane t.(u - pred) = 0 or a landing u_i = value.
std::optional<PalcPoint> correct(const System& sys, const VecX& pred, const VecX& t, const std::optional<Landing>& land,
                                 const StepPolicy& policy, double h_abs) {
    VecX u = pred;
    VecX f;
    MatX j;
    for (int it = 0; it < policy.corrector_iterations; ++it) {
        try {
            sys.eval(u, f, j);
        } catch (const Error&) {
            return std::nullopt;
        }
        if (!f.allFinite() || !j.allFinite()) return std::nullopt;
        MatX m(sys.n, sys.n);
        VecX rhs(sys.n);
        m.topRows(sys.n - 1) = j;
        rhs.head(sys.n - 1) = -f;
        if (land) {
            m.row(sys.n - 1).setZero();
            m(sys.n - 1, land->index) = 1.0;
            rhs[sys.n - 1] = -(u[land->index] - land->value);
        } else {
            m.row(sys.n - 1) = t.transpose();
            rhs[sys.n - 1] = -t.dot(u - pred);
        }
        const Eigen::FullPivLU<MatX> lu(m);
        if (!lu.isInvertible()) return std::nullopt;
        const VecX du = lu.solve(rhs);
        if (!du.allFinite()) return std::nullopt;
        u += du;
        if (du.norm() > 2.0 * std::max(h_abs, 1e-3 * size_of(sys, u)) && it > 0) return std::nullopt;
        if (du.norm() <= 1e-10 * size_of(sys, u)) {
            try {
                sys.eval(u, f, j);
            } catch (const Error&) {
                return std::nullopt;
            }
            if (f.norm() <= policy.corrector_tol * sys.scale * 10.0) {
                PalcPoint p;
                p.u = u;
                p.t = tangent_of(j, t);
                p.residual = f.norm();
                return p;
            }
        }
    }
    // Accept a converged residual even if the last update was not tiny.
    try {
        sys.eval(u, f, j);
    } catch (const Error&) {
        return std::nullopt;
    }
    if (f.norm() <= policy.corrector_tol * sys.scale) {
        PalcPoint p;
        p.u = u;
        p.t = tangent_of(j, t);
        p.residual = f.norm();
        return p;
    }
    return std::nullopt;
}

PalcResult palc(const System& sys, const VecX& u0, const VecX& t_hint, const Hooks& hooks, const StepPolicy& policy) {
    PalcResult res;
    VecX f;
    MatX j;
    sys.eval(u0, f, j);
    PalcPoint first;
    first.u = u0;
    first.t = tangent_of(j, t_hint);
    first.residual = f.norm();
    res.points.push_back(first);

    double h = std::clamp(policy.initial_step, policy.min_step, policy.max_step);
    int successes = 0;
    int halvings = 0;
    while (true) {
        if (res.points.size() >= policy.max_states) {
            res.terminal = Event::StateLimit;
            return res;
        }
        const PalcPoint& cur = res.points.back();
        const double h_abs = h * size_of(sys, cur.u);
        VecX dir = cur.t;
        if (res.points.size() >= 2) {
            // Secant predictor, oriented along the current tangent.
            VecX sec = cur.u - res.points[res.points.size() - 2].u;
            if (sec.norm() > 0.0) {
                sec.normalize();
                if (sec.dot(cur.t) > 0.0) dir = sec;
            }
        }
        const VecX pred = cur.u + h_abs * dir;
        auto next = correct(sys, pred, dir, std::nullopt, policy, h_abs);
        if (next && next->t.dot(cur.t) < 0.0) next->t = -next->t;
        if (!next || next->t.dot(cur.t) < policy.min_tangent_cos) {
            h *= 0.5;
            successes = 0;
            if (++halvings > policy.max_halvings || h < policy.min_step) {
                res.terminal = Event::StepFailure;
                res.detail = "step size underflow";
                return res;
            }
            continue;
        }
        halvings = 0;

        if (hooks.outside) {
            if (const auto land = hooks.outside(next->u)) {
                auto fin = correct(sys, next->u, next->t, land, policy, h_abs);
                if (fin) {
                    if (fin->t.dot(cur.t) < 0.0) fin->t = -fin->t;
                    fin->event = Event::ControlLimit;
                    res.points.push_back(*fin);
                }
                res.terminal = Event::ControlLimit;
                return res;
            }
        }
        if (sys.theta(next->u).cwiseAbs().maxCoeff() > policy.blowup) {
            next->event = Event::Blowup;
            res.points.push_back(*next);
            res.terminal = Event::Blowup;
            return res;
        }
        const bool fold = hooks.fold_index >= 0 &&
                          (next->t[hooks.fold_index] > 0.0) != (cur.t[hooks.fold_index] > 0.0) &&
                          cur.t[hooks.fold_index] != 0.0;
        if (fold) next->event = Event::Fold;
        res.points.push_back(*next);
        if (fold && policy.stop_at_fold) {
            res.terminal = Event::Fold;
            return res;
        }
        if (hooks.stall_window > 0 && res.points.size() > static_cast<std::size_t>(hooks.stall_window)) {
            const VecX& old = res.points[res.points.size() - 1 - hooks.stall_window].u;
            if ((res.points.back().u.head<2>() - old.head<2>()).norm() < hooks.stall_tol) {
                res.points.back().event = Event::Stalled;
                res.terminal = Event::Stalled;
                res.detail = "data point stationary";
                return res;
            }
        }
        if (++successes >= policy.grow_after) {
            h = std::min(h * policy.grow, policy.max_step);
            successes = 0;
        }
    }
}

Vec4 dR_dcontrol(const InverseProblem& problem, Control control, const shooting::ResidualEval& ev) {
    switch (control) {
    case Control::X2: return Vec4(0.0, 0.0, -1.0, 0.0);
    case Control::Y2: return Vec4(0.0, 0.0, 0.0, -1.0);
    case Control::FamilyParam: return ev.family_column;
    }
    (void)problem;
    return Vec4::Zero();
}

System branch_system(const InverseProblem& base, Control control, const StepPolicy& policy) {
    System sys;
    sys.n = 5;
    sys.scale = base.scale();
    sys.theta = [](const VecX& u) { return Vec4(u.segment<4>(1)); };
    sys.eval = [base, control, tol = policy.integration_tol](const VecX& u, VecX& f, MatX& j) {
        const InverseProblem pr = with_control(base, control, u[0]);
        const auto ev = shooting::evaluate_residual(pr, u.segment<4>(1), tol, control == Control::FamilyParam);
        f = ev.residual;
        j.resize(4, 5);
        j.col(0) = dR_dcontrol(pr, control, ev);
        j.rightCols<4>() = ev.jac_theta;
    };
    return sys;
}

BranchState to_state(const InverseProblem& base, Control control, const PalcPoint& p, double arclength) {
    const InverseProblem pr = with_control(base, control, p.u[0]);
    BranchState s;
    s.control = p.u[0];
    s.p2 = pr.p2;
    s.params = pr.params(p.u.segment<4>(1));
    s.arclength = arclength;
    s.residual = p.residual;
    s.event = p.event;
    return s;
}

} // namespace

std::string_view to_string(Control c) noexcept {
    switch (c) {
    case Control::X2: return "x2";
    case Control::Y2: return "y2";
    case Control::FamilyParam: return "family_param";
    }
    return "?";
}

std::string_view to_string(Event e) noexcept {
    switch (e) {
    case Event::None: return "";
    case Event::Fold: return "fold";
    case Event::Blowup: return "blowup";
    case Event::ControlLimit: return "limit";
    case Event::StepFailure: return "step_failure";
    case Event::StateLimit: return "state_limit";
    case Event::Stalled: return "stalled";
    }
    return "?";
}

InverseProblem with_control(const InverseProblem& problem, Control control, double value) {
    InverseProblem pr = problem;
    switch (control) {
    case Control::X2: pr.p2.x() = value; break;
    case Control::Y2: pr.p2.y() = value; break;
    case Control::FamilyParam: pr.family_param = value; break;
    }
    return pr;
}

double control_value(const InverseProblem& problem, Control control) {
    switch (control) {
    case Control::X2: return problem.p2.x();
    case Control::Y2: return problem.p2.y();
    case Control::FamilyParam: return problem.family_param;
    }
    return 0.0;
}

SolutionBranch continue_branch(const InverseProblem& problem, const Vec4& start, Control control, double lo, double hi,
                               int direction, const StepPolicy& policy) {
    problem.validate();
    if (!(lo <= hi)) throw Error(ErrorCode::DomainError, "empty control interval");
    if (control == Control::FamilyParam && problem.family == lv::Family::Plain) {
        throw Error(ErrorCode::DomainError, "the plain family has no family parameter");
    }
    SolutionBranch branch;
    branch.problem = problem;
    branch.control = control;
    const double c0 = control_value(problem, control);

    const System sys = branch_system(problem, control, policy);
    VecX u0(5);
    u0[0] = c0;
    u0.segment<4>(1) = start;
    VecX hint = VecX::Zero(5);
    hint[0] = direction >= 0 ? 1.0 : -1.0;

    if (lo == hi || c0 < lo || c0 > hi) {
        VecX f;
        MatX j;
        sys.eval(u0, f, j);
        PalcPoint p{u0, tangent_of(j, hint), f.norm(), Event::ControlLimit};
        branch.states.push_back(to_state(problem, control, p, 0.0));
        branch.tangents.push_back(p.t);
        branch.terminal = Event::ControlLimit;
        return branch;
    }

    Hooks hooks;
    hooks.fold_index = 0;
    hooks.outside = [lo, hi](const VecX& u) -> std::optional<Landing> {
        if (u[0] < lo) return Landing{0, lo};
        if (u[0] > hi) return Landing{0, hi};
        return std::nullopt;
    };
    const PalcResult res = palc(sys, u0, hint, hooks, policy);
    double arc = 0.0;
    for (std::size_t i = 0; i < res.points.size(); ++i) {
        if (i > 0) arc += (res.points[i].u - res.points[i - 1].u).norm();
        branch.states.push_back(to_state(problem, control, res.points[i], arc));
        branch.tangents.push_back(res.points[i].t);
    }
    branch.terminal = res.terminal;
    branch.detail = res.detail;
    return branch;
}

std::vector<FoldPoint> detect_fold(const SolutionBranch& branch) {
    std::vector<FoldPoint> folds;
    if (branch.states.size() < 3) return folds;
    StepPolicy policy;
    const System sys = branch_system(branch.problem, branch.control, policy);
    auto pack = [](const BranchState& s) {
        VecX u(5);
        u[0] = s.control;
        u.segment<4>(1) = s.params.theta();
        return u;
    };
    for (std::size_t i = 1; i < branch.states.size(); ++i) {
        const Vec5& ta = branch.tangents[i - 1];
        const Vec5& tb = branch.tangents[i];
        if ((ta[0] > 0.0) == (tb[0] > 0.0) || ta[0] == 0.0) continue;
        VecX ua = pack(branch.states[i - 1]);
        VecX ub = pack(branch.states[i]);
        VecX t_lo = ta;
        PalcPoint best{ub, tb, branch.states[i].residual, Event::Fold};
        for (int it = 0; it < 80 && std::abs(ub[0] - ua[0]) > 1e-8; ++it) {
            VecX d = ub - ua;
            const double len = d.norm();
            if (len <= 0.0) break;
            d /= len;
            const VecX mid = 0.5 * (ua + ub);
            auto p = correct(sys, mid, d, std::nullopt, policy, len);
            if (!p) break;
            if (p->t.dot(t_lo) < 0.0) p->t = -p->t;
            if ((p->t[0] > 0.0) == (t_lo[0] > 0.0)) {
                ua = p->u;
                t_lo = p->t;
            } else {
                ub = p->u;
                best = *p;
            }
        }
        FoldPoint fp;
        fp.control = 0.5 * (ua[0] + ub[0]);
        const InverseProblem pr = with_control(branch.problem, branch.control, best.u[0]);
        fp.p2 = with_control(branch.problem, branch.control, fp.control).p2;
        fp.params = pr.params(best.u.segment<4>(1));
        fp.tangent = best.t;
        folds.push_back(fp);
    }
    return folds;
}

namespace {

Curve run_curve(const System& sys, const VecX& u0, const Box& box, const std::string& label, const StepPolicy& policy,
                const std::function<CurvePoint(const VecX&)>& unpack) {
    Curve curve;
    curve.label = label;
    Hooks hooks;
    hooks.outside = [box](const VecX& u) -> std::optional<Landing> {
        if (u[0] < box.x_lo) return Landing{0, box.x_lo};
        if (u[0] > box.x_hi) return Landing{0, box.x_hi};
        if (u[1] < box.y_lo) return Landing{1, box.y_lo};
        if (u[1] > box.y_hi) return Landing{1, box.y_hi};
        return std::nullopt;
    };
    hooks.stall_window = 25;
    hooks.stall_tol = 1e-4 * std::max(box.x_hi - box.x_lo, box.y_hi - box.y_lo);
    VecX f;
    MatX j;
    sys.eval(u0, f, j);
    const VecX t0 = tangent_of(j, VecX());
    for (int dir : {1, -1}) {
        const PalcResult res = palc(sys, u0, dir * t0, hooks, policy);
        std::vector<CurvePoint> pts;
        for (const auto& p : res.points) pts.push_back(unpack(p.u));
        if (dir > 0) {
            curve.terminal_forward = res.terminal;
        } else {
            curve.terminal_backward = res.terminal;
            std::reverse(pts.begin(), pts.end());
        }
        curve.branches.push_back(std::move(pts));
    }
    // Join the two halves into a single polyline through the start point.
    std::vector<CurvePoint> joined = curve.branches[1];
    joined.insert(joined.end(), curve.branches[0].begin() + 1, curve.branches[0].end());
    curve.branches = {std::move(joined)};
    return curve;
}

// Smallest-singular-value border of J_theta, used to define the fold test
// function g through [J b; c^T 0][v; g] = [0; 1].
struct Border {
    Vec4 b;
    Vec4 c;
};

double fold_test(const shooting::Mat4& j, const Border& border) {
    Eigen::Matrix<double, 5, 5> m;
    m.topLeftCorner<4, 4>() = j;
    m.topRightCorner<4, 1>() = border.b;
    m.bottomLeftCorner<1, 4>() = border.c.transpose();
    m(4, 4) = 0.0;
    Eigen::Matrix<double, 5, 1> rhs = Eigen::Matrix<double, 5, 1>::Zero();
    rhs[4] = 1.0;
    return m.fullPivLu().solve(rhs)[4];
}

} // namespace

Curve continue_fold(const InverseProblem& problem, const FoldPoint& fold, const Box& box, const std::string& label,
                    const StepPolicy& policy) {
    InverseProblem base = problem;
    base.p2 = fold.p2;
    base.validate();
    const Vec4 theta0 = fold.params.theta();
    const double tol = policy.integration_tol;
    const auto ev0 = shooting::evaluate_residual(base, theta0, tol);
    const Eigen::JacobiSVD<shooting::Mat4> svd(ev0.jac_theta, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Border border{svd.matrixU().col(3), svd.matrixV().col(3)};
    const double sigma_rel = svd.singularValues()[3] / std::max(svd.singularValues()[0], 1e-300);
    if (!(sigma_rel < 1e-3)) {
        throw Error(ErrorCode::LossOfFold, "Jacobian is not near-singular at the fold start");
    }

    System sys;
    sys.n = 6;
    sys.scale = base.scale();
    sys.theta = [](const VecX& u) { return Vec4(u.segment<4>(2)); };
    sys.eval = [base, border, tol](const VecX& u, VecX& f, MatX& j) {
        InverseProblem pr = base;
        pr.p2 = Point(u[0], u[1]);
        const Vec4 th = u.segment<4>(2);
        const auto ev = shooting::evaluate_residual(pr, th, tol);
        f.resize(5);
        f.head<4>() = ev.residual;
        f[4] = fold_test(ev.jac_theta, border);
        j = MatX::Zero(5, 6);
        j(2, 0) = -1.0;
        j(3, 1) = -1.0;
        j.block<4, 4>(0, 2) = ev.jac_theta;
        // The test function depends on theta only (J_theta does not involve
        // P2); its gradient is taken by central differences.
        for (int k = 0; k < 4; ++k) {
            const double h = 1e-5 * std::max(1.0, std::abs(th[k]));
            Vec4 tp = th, tm = th;
            tp[k] += h;
            tm[k] -= h;
            const double gp = fold_test(shooting::evaluate_residual(pr, tp, tol).jac_theta, border);
            const double gm = fold_test(shooting::evaluate_residual(pr, tm, tol).jac_theta, border);
            j(4, 2 + k) = (gp - gm) / (2.0 * h);
        }
    };

    // Re-establish the fold condition at the start point (fixed x2).
    VecX u0(6);
    u0 << fold.p2.x(), fold.p2.y(), theta0;
    StepPolicy pol = policy;
    pol.corrector_iterations = std::max(policy.corrector_iterations, 20);
    auto start = correct(sys, u0, VecX::Unit(6, 0), std::nullopt, pol, 1.0);
    if (!start) throw Error(ErrorCode::LossOfFold, "fold condition cannot be re-established");
    return run_curve(sys, start->u, box, label, pol, [base](const VecX& u) {
        CurvePoint p;
        p.p2 = Point(u[0], u[1]);
        p.params = base.params(u.segment<4>(2));
        return p;
    });
}

Curve trace_zero_curve(const InverseProblem& problem, const Vec4& start, ZeroParameter which, const Box& box,
                       const std::string& label, const StepPolicy& policy) {
    problem.validate();
    const int fixed = static_cast<int>(which);
    if (std::abs(start[fixed]) > 1e-6 * std::max(1.0, start.norm())) {
        throw Error(ErrorCode::DomainError, "start solution does not have the selected parameter at zero");
    }
    auto full_theta = [fixed](const VecX& u) {
        Vec4 th;
        for (int k = 0, m = 0; k < 4; ++k) th[k] = k == fixed ? 0.0 : u[2 + m++];
        return th;
    };
    const double tol = policy.integration_tol;
    System sys;
    sys.n = 5;
    sys.scale = problem.scale();
    sys.theta = full_theta;
    sys.eval = [problem, fixed, tol, full_theta](const VecX& u, VecX& f, MatX& j) {
        InverseProblem pr = problem;
        pr.p2 = Point(u[0], u[1]);
        const auto ev = shooting::evaluate_residual(pr, full_theta(u), tol);
        f = ev.residual;
        j = MatX::Zero(4, 5);
        j(2, 0) = -1.0;
        j(3, 1) = -1.0;
        for (int k = 0, m = 0; k < 4; ++k) {
            if (k != fixed) j.col(2 + m++) = ev.jac_theta.col(k);
        }
    };
    VecX u0(5);
    u0[0] = problem.p2.x();
    u0[1] = problem.p2.y();
    for (int k = 0, m = 0; k < 4; ++k) {
        if (k != fixed) u0[2 + m++] = start[k];
    }
    // Polish the start on the constrained system at fixed x2.
    if (auto p = correct(sys, u0, VecX::Unit(5, 0), std::nullopt, policy, 1.0)) u0 = p->u;
    return run_curve(sys, u0, box, label, policy, [problem, full_theta](const VecX& u) {
        CurvePoint p;
        p.p2 = Point(u[0], u[1]);
        p.params = problem.params(full_theta(u));
        return p;
    });
}

} // namespace trajid::continuation
