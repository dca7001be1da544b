#include "trajid/shooting.hpp"

#include "trajid/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace trajid::shooting {

namespace {

ode::IntegratorOptions integrator_options(const InverseProblem& problem, double tol, std::size_t max_steps = 100000) {
    ode::IntegratorOptions opts;
    opts.tol = {tol, tol};
    opts.blowup_norm = 1e8 * problem.scale();
    opts.max_steps = max_steps;
    return opts;
}

std::array<double, 2> sample_times(const InverseProblem& problem) {
    return {problem.times[1] - problem.times[0], problem.times[2] - problem.times[0]};
}

ode::Vec state0(const InverseProblem& problem) { return problem.p0; }

bool finite_theta(const Vec4& t) { return t.allFinite(); }

// Lexicographic order on parameter vectors for deterministic sorting.
bool lex_less(const Vec4& a, const Vec4& b) {
    for (int i = 0; i < 4; ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

bool near(const Vec4& a, const Vec4& b, double radius) {
    return (a - b).norm() <= radius * std::max({1.0, a.norm(), b.norm()});
}

double wrap_half(double v) {
    v -= std::floor(v + 0.5);
    return v;
}

} // namespace

void InverseProblem::validate() const {
    for (const Point* p : {&p0, &p1, &p2}) {
        if (!p->allFinite() || !(p->x() > 0.0) || !(p->y() > 0.0)) {
            throw Error(ErrorCode::DomainError, "data points must lie in the open first quadrant");
        }
    }
    if (!(times[0] < times[1]) || !(times[1] < times[2])) {
        throw Error(ErrorCode::DomainError, "passage times must increase");
    }
    if (family == lv::Family::Saturated && !(family_param >= 0.0)) {
        throw Error(ErrorCode::DomainError, "saturation constant must be non-negative");
    }
    if (!std::isfinite(family_param)) throw Error(ErrorCode::DomainError, "non-finite family parameter");
}

double InverseProblem::scale() const {
    return std::max({1.0, p0.cwiseAbs().maxCoeff(), p1.cwiseAbs().maxCoeff(), p2.cwiseAbs().maxCoeff()});
}

lv::LVParams InverseProblem::params(const Vec4& theta) const {
    lv::LVParams p;
    p.family = family;
    p.family_param = family_param;
    return p.with_theta(theta);
}

std::string rotation_label(const LVSolution& sol) {
    if (!sol.turns) return {};
    const auto n = static_cast<long>(std::lround(std::abs(*sol.turns)));
    return (*sol.turns > 0.0 ? "cw" : "ccw") + std::to_string(n);
}

bool below_line(const Point& p0, const Point& p1, const Point& p2) {
    if (p1.x() != p0.x()) {
        const double slope = (p1.y() - p0.y()) / (p1.x() - p0.x());
        return p2.y() < p0.y() + slope * (p2.x() - p0.x());
    }
    const Point d = p1 - p0;
    const Point e = p2 - p0;
    return d.x() * e.y() - d.y() * e.x() < 0.0;
}

ResidualEval evaluate_residual(const InverseProblem& problem, const Vec4& theta, double integration_tol,
                               bool with_family_column, std::size_t max_steps) {
    const auto ts = sample_times(problem);
    ResidualEval out;
    ode::SensitivityBundle bundle;
    if (with_family_column) {
        ode::Vec th(5);
        th.head<4>() = theta;
        th[4] = problem.family_param;
        bundle = ode::integrate_with_sensitivities(lv::lv_field_extended(problem.family), state0(problem), th, ts,
                                                   integrator_options(problem, integration_tol, max_steps));
    } else {
        bundle = ode::integrate_with_sensitivities(lv::lv_field(problem.family, problem.family_param),
                                                   state0(problem), ode::Vec(theta), ts,
                                                   integrator_options(problem, integration_tol, max_steps));
    }
    out.residual.head<2>() = bundle.states[0] - problem.p1;
    out.residual.tail<2>() = bundle.states[1] - problem.p2;
    out.jac_theta.topRows<2>() = bundle.sensitivities[0].leftCols<4>();
    out.jac_theta.bottomRows<2>() = bundle.sensitivities[1].leftCols<4>();
    if (with_family_column) {
        out.family_column.head<2>() = bundle.sensitivities[0].col(4);
        out.family_column.tail<2>() = bundle.sensitivities[1].col(4);
    }
    return out;
}

Vec4 residual_only(const InverseProblem& problem, const Vec4& theta, double integration_tol,
                   std::size_t max_steps) {
    const auto ts = sample_times(problem);
    const auto states = ode::integrate_samples(lv::lv_field(problem.family, problem.family_param), state0(problem),
                                               ode::Vec(theta), ts, integrator_options(problem, integration_tol, max_steps));
    Vec4 r;
    r.head<2>() = states[0] - problem.p1;
    r.tail<2>() = states[1] - problem.p2;
    return r;
}

double verify_residual(const InverseProblem& problem, const Vec4& theta, double integration_tol) {
    const Vec4 r = residual_only(problem, theta, integration_tol);
    return std::max(r.head<2>().norm(), r.tail<2>().norm());
}

ShootOutcome shoot(const InverseProblem& problem, const Vec4& theta0, const ShootOptions& opts) {
    problem.validate();
    ShootOutcome out;
    out.last_theta = theta0;
    if (!finite_theta(theta0)) {
        out.failure = ErrorCode::NoConvergence;
        out.message = "non-finite start";
        return out;
    }
    const double scale = problem.scale();
    auto fail = [&](ErrorCode code, std::string msg) {
        out.failure = code;
        out.message = std::move(msg);
        return out;
    };

    Vec4 theta = theta0;
    double tol = 1e-8;
    std::vector<double> history;
    bool converged = false;
    for (int it = 0; it < opts.max_iterations; ++it) {
        out.iterations = it + 1;
        ResidualEval ev;
        try {
            ev = evaluate_residual(problem, theta, tol, false, opts.max_integration_steps);
        } catch (const Error& e) {
            return fail(it == 0 ? ErrorCode::IntegrationBlowup : ErrorCode::NoConvergence, e.what());
        }
        const double rn = ev.residual.norm();
        out.last_residual = rn;
        history.push_back(rn);
        if (rn <= opts.converge_tol * scale) {
            if (tol <= 1e-12) {
                converged = true;
                break;
            }
            tol = 1e-12;
            continue;
        }
        if (opts.stall_window > 0 && it >= opts.stall_window &&
            rn > opts.stall_factor * history[static_cast<std::size_t>(it - opts.stall_window)]) {
            return fail(ErrorCode::NoConvergence, "residual stalled");
        }

        // Directions with relative singular value below 1e-9 are treated as
        // null (solution continua), which yields the minimum-norm step.
        Eigen::CompleteOrthogonalDecomposition<Mat4> cod;
        cod.setThreshold(1e-9);
        cod.compute(ev.jac_theta);
        Vec4 step = -cod.solve(ev.residual);
        if (!step.allFinite()) return fail(ErrorCode::NoConvergence, "singular Newton system");
        const double max_len = opts.max_step_ratio * std::max(1.0, theta.norm());
        if (step.norm() > max_len) step *= max_len / step.norm();

        double lambda = 1.0;
        bool accepted = false;
        bool blew_up = false;
        Vec4 trial;
        double trial_norm = 0.0;
        for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
            trial = theta + lambda * step;
            if (trial.cwiseAbs().maxCoeff() > opts.blowup) {
                blew_up = true;
                continue;
            }
            try {
                trial_norm = residual_only(problem, trial, tol, opts.max_integration_steps).norm();
            } catch (const Error&) {
                continue;
            }
            if (std::isfinite(trial_norm) && trial_norm < (1.0 - 1e-4 * lambda) * rn) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // At the integration noise floor the residual cannot decrease
            // further; accept it when it is already well inside verification.
            if (tol <= 1e-12 && rn <= 0.1 * opts.verify_tol * scale) {
                converged = true;
                break;
            }
            if (tol > 1e-12 && rn <= 1e3 * opts.converge_tol * scale) {
                tol = 1e-12;
                continue;
            }
            out.last_theta = theta;
            if (blew_up) return fail(ErrorCode::IntegrationBlowup, "parameters exceed the blow-up threshold");
            return fail(ErrorCode::NoConvergence, "line search failed");
        }
        theta = trial;
        out.last_theta = theta;
        tol = std::clamp(1e-3 * trial_norm / scale, 1e-12, 1e-8);
    }
    if (!converged) return fail(ErrorCode::NoConvergence, "iteration limit reached");

    double verified = 0.0;
    try {
        verified = verify_residual(problem, theta, opts.verify_integration_tol);
    } catch (const Error& e) {
        return fail(ErrorCode::NoConvergence, std::string("verification failed: ") + e.what());
    }
    if (!(verified <= opts.verify_tol * scale)) {
        return fail(ErrorCode::NoConvergence, "verification residual " + std::to_string(verified));
    }
    LVSolution sol;
    sol.params = problem.params(theta);
    sol.signature = lv::signature_of(theta);
    sol.residual = verified;
    sol.iterations = out.iterations;
    annotate_periodic(problem, sol);
    out.solution = std::move(sol);
    return out;
}

void annotate_periodic(const InverseProblem& problem, LVSolution& sol) {
    sol.period.reset();
    sol.rotations.reset();
    sol.turns.reset();
    sol.canonical = false;
    // Only the conservative field (plain, or a perturbed family at zero
    // perturbation) has closed orbits.
    if (problem.family != lv::Family::Plain && problem.family_param != 0.0) return;
    const std::string sig = sol.signature.str();
    if (sig != "-+-+" && sig != "+-+-") return;
    const auto eq = lv::equilibrium(sol.params);
    if (!eq || !(eq->x() > 0.0) || !(eq->y() > 0.0)) return;
    double period = 0.0;
    try {
        ode::PeriodOptions po;
        po.max_time = 1e3 * std::max(1.0, problem.times[2] - problem.times[0]);
        period = ode::find_period(lv::lv_field(sol.params), state0(problem), ode::Vec(sol.theta()), po);
    } catch (const Error&) {
        return;
    }
    const double signed_period = sol.params.beta1 > 0.0 ? period : -period;
    const double dt = problem.times[1] - problem.times[0];
    const double revolutions = dt / signed_period;
    sol.period = period;
    sol.turns = revolutions;
    sol.rotations = static_cast<int>(std::floor(revolutions));
    const double phase = revolutions - std::floor(revolutions);
    const int canonical_m = 2.0 * phase < 1.0 ? 0 : -1;
    sol.canonical = *sol.rotations == canonical_m;
}

std::vector<LVSolution> enumerate_rescales(const InverseProblem& problem, const LVSolution& sol,
                                           const std::vector<int>& rotations) {
    if (!sol.period || !sol.rotations) throw Error(ErrorCode::NotPeriodic, "solution has no period");
    const double dt = problem.times[1] - problem.times[0];
    const double signed_period = sol.params.beta1 > 0.0 ? *sol.period : -*sol.period;
    const double revolutions = dt / signed_period;
    const double phase = revolutions - std::floor(revolutions);
    const double scale = problem.scale();
    std::vector<LVSolution> out;
    for (int m : rotations) {
        const double gamma = (m + phase) * signed_period / dt;
        LVSolution r = sol;
        if (m != *sol.rotations) {
            const Vec4 theta = gamma * sol.theta();
            r.params = sol.params.with_theta(theta);
            r.signature = lv::signature_of(theta);
            r.period = *sol.period / std::abs(gamma);
            r.rotations = m;
            r.turns = m + phase;
            r.residual = verify_residual(problem, theta);
            r.canonical = m == (2.0 * phase < 1.0 ? 0 : -1);
        }
        if (!(r.residual <= 1e-7 * scale)) {
            throw Error(ErrorCode::NoConvergence, "rescaled member with " + std::to_string(m) + " rotations fails verification");
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<LVSolution> canonicalize(const InverseProblem& problem, std::vector<LVSolution> sols,
                                     double dedup_radius) {
    const double dt = problem.times[1] - problem.times[0];
    for (LVSolution& s : sols) {
        if (!s.period || !s.rotations) continue;
        const double signed_period = s.params.beta1 > 0.0 ? *s.period : -*s.period;
        const double revolutions = dt / signed_period;
        const double phase = revolutions - std::floor(revolutions);
        int target = 2.0 * phase < 1.0 ? 0 : -1;
        if (std::abs(2.0 * phase - 1.0) < 1e-9) {
            // Half-orbit passages are ambiguous by phase alone; the side of
            // P2 relative to the chord P0P1 decides the direction
            // (target 0 yields clockwise travel).
            target = below_line(problem.p0, problem.p1, problem.p2) ? 0 : -1;
        }
        if (*s.rotations != target) {
            const double gamma = (target + phase) * signed_period / dt;
            const Vec4 theta = gamma * s.theta();
            s.params = s.params.with_theta(theta);
            s.signature = lv::signature_of(theta);
            s.period = *s.period / std::abs(gamma);
            s.rotations = target;
            s.turns = target + phase;
            try {
                s.residual = verify_residual(problem, theta);
            } catch (const Error&) {
                s.residual = std::numeric_limits<double>::infinity();
            }
        }
        s.canonical = true;
    }
    std::sort(sols.begin(), sols.end(), [](const LVSolution& a, const LVSolution& b) {
        if (a.residual != b.residual) return a.residual < b.residual;
        return lex_less(a.theta(), b.theta());
    });
    std::vector<LVSolution> kept;
    for (LVSolution& s : sols) {
        const bool dup = std::any_of(kept.begin(), kept.end(),
                                     [&](const LVSolution& k) { return near(k.theta(), s.theta(), dedup_radius); });
        if (!dup) kept.push_back(std::move(s));
    }
    std::sort(kept.begin(), kept.end(), [](const LVSolution& a, const LVSolution& b) {
        return lex_less(a.theta(), b.theta());
    });
    return kept;
}

namespace {

// Least-squares fit of per-interval growth rates: ln(x_{k+1}/x_k) is
// approximated by (alpha1 + beta1 * mean y) * dt, and likewise for y.
Vec4 log_linear_seed(const InverseProblem& pr) {
    const double d1 = pr.times[1] - pr.times[0];
    const double d2 = pr.times[2] - pr.times[1];
    Eigen::Matrix2d mx, my;
    mx << d1, d1 * 0.5 * (pr.p0.y() + pr.p1.y()), d2, d2 * 0.5 * (pr.p1.y() + pr.p2.y());
    my << d1 * 0.5 * (pr.p0.x() + pr.p1.x()), d1, d2 * 0.5 * (pr.p1.x() + pr.p2.x()), d2;
    const Eigen::Vector2d rx(std::log(pr.p1.x() / pr.p0.x()), std::log(pr.p2.x() / pr.p1.x()));
    const Eigen::Vector2d ry(std::log(pr.p1.y() / pr.p0.y()), std::log(pr.p2.y() / pr.p1.y()));
    const Eigen::Vector2d ax = mx.completeOrthogonalDecomposition().solve(rx);
    const Eigen::Vector2d ay = my.completeOrthogonalDecomposition().solve(ry);
    return {ax[0], ax[1], ay[0], ay[1]};
}

// Three-point defect of the affine surrogate x' = J (x - x*) + f(x*) of the
// LV field linearised at x* = P1, evaluated through the exponential of the
// augmented 3x3 generator.
Vec4 affine_defect(const InverseProblem& pr, const Vec4& th) {
    const double xs = pr.p1.x(), ys = pr.p1.y();
    linalg::Mat b = linalg::Mat::Zero(3, 3);
    b(0, 0) = th[0] + th[1] * ys;
    b(0, 1) = th[1] * xs;
    b(1, 0) = th[2] * ys;
    b(1, 1) = th[2] * xs + th[3];
    b(0, 2) = -th[1] * xs * ys;
    b(1, 2) = -th[2] * xs * ys;
    const Eigen::Vector3d z0(pr.p0.x(), pr.p0.y(), 1.0);
    const linalg::Mat e1 = linalg::expm(b * (pr.times[1] - pr.times[0]));
    const linalg::Mat e2 = linalg::expm(b * (pr.times[2] - pr.times[0]));
    const Eigen::Vector3d z1 = e1 * z0;
    const Eigen::Vector3d z2 = e2 * z0;
    return {z1[0] - pr.p1.x(), z1[1] - pr.p1.y(), z2[0] - pr.p2.x(), z2[1] - pr.p2.y()};
}

std::optional<Vec4> affine_seed(const InverseProblem& pr, const Vec4& start) {
    Vec4 th = start;
    double lm = 1e-3;
    Vec4 r = affine_defect(pr, th);
    if (!r.allFinite()) return std::nullopt;
    for (int it = 0; it < 40 && r.norm() > 1e-12; ++it) {
        Mat4 j;
        for (int k = 0; k < 4; ++k) {
            const double h = 1e-7 * std::max(1.0, std::abs(th[k]));
            Vec4 tp = th, tm = th;
            tp[k] += h;
            tm[k] -= h;
            j.col(k) = (affine_defect(pr, tp) - affine_defect(pr, tm)) / (2.0 * h);
        }
        bool improved = false;
        for (int tries = 0; tries < 12; ++tries) {
            const Mat4 a = j.transpose() * j + lm * Mat4::Identity();
            const Vec4 step = -a.ldlt().solve(j.transpose() * r);
            const Vec4 cand = th + step;
            const Vec4 rc = affine_defect(pr, cand);
            if (rc.allFinite() && rc.norm() < r.norm()) {
                th = cand;
                r = rc;
                lm = std::max(lm * 0.3, 1e-12);
                improved = true;
                break;
            }
            lm *= 10.0;
        }
        if (!improved) break;
        if (th.cwiseAbs().maxCoeff() > 1e4) return std::nullopt;
    }
    if (!th.allFinite()) return std::nullopt;
    return th;
}

struct OrbitPhases {
    double period = 0.0;
    double t01 = 0.0;
    double t12 = 0.0;
};

// Period and passage times along the closed orbit through P0 for unit-scale
// parameters; nullopt when any of them cannot be measured.
std::optional<OrbitPhases> orbit_phases(const InverseProblem& pr, const Vec4& theta) {
    const ode::VectorField field = lv::lv_field(lv::Family::Plain, 0.0);
    const ode::Vec th = theta;
    ode::PeriodOptions po;
    po.integrator.tol = {1e-10, 1e-10};
    po.return_tol = 1e-6;
    po.max_time = 1e3;
    try {
        OrbitPhases ph;
        ph.period = ode::find_period(field, pr.p0, th, po);
        auto passage = [&](const Point& from, const Point& to) -> std::optional<double> {
            Eigen::Vector2d f;
            field.rate({to.data(), 2}, {th.data(), 4}, {f.data(), 2});
            return ode::first_upward_crossing(field, from, th, to, f, 1.5 * ph.period, false, po.integrator, 1e-10);
        };
        const auto a = passage(pr.p0, pr.p1);
        const auto b = passage(pr.p1, pr.p2);
        if (!a || !b) return std::nullopt;
        ph.t01 = std::fmod(*a, ph.period);
        ph.t12 = std::fmod(*b, ph.period);
        return ph;
    } catch (const Error&) {
        return std::nullopt;
    }
}

// Closed-orbit parameter direction (beta1 = 1) whose Hamiltonian takes equal
// values at the three data points, for a given x*.
std::optional<Vec4> level_set_direction(const InverseProblem& pr, double x_star) {
    auto xs = [&](double x) { return x - x_star * std::log(x); };
    Eigen::Matrix2d m;
    m << xs(pr.p1.x()) - xs(pr.p0.x()), std::log(pr.p1.y() / pr.p0.y()), xs(pr.p2.x()) - xs(pr.p1.x()),
        std::log(pr.p2.y() / pr.p1.y());
    const Eigen::Vector2d rhs(pr.p1.y() - pr.p0.y(), pr.p2.y() - pr.p1.y());
    if (std::abs(m.determinant()) < 1e-12 * std::max(1.0, m.norm() * m.norm())) return std::nullopt;
    const Eigen::Vector2d sol = m.partialPivLu().solve(rhs);
    const double r = sol[0];
    const double y_star = sol[1];
    if (!(r < 0.0) || !(y_star > 0.0) || !std::isfinite(r) || !std::isfinite(y_star)) return std::nullopt;
    return Vec4{-y_star, 1.0, r, -r * x_star};
}

void hamiltonian_seeds(const InverseProblem& pr, std::vector<Vec4>& seeds) {
    const double xmin = std::min({pr.p0.x(), pr.p1.x(), pr.p2.x()});
    const double xmax = std::max({pr.p0.x(), pr.p1.x(), pr.p2.x()});
    const double lo = std::log(0.05 * xmin), hi = std::log(20.0 * xmax);
    constexpr int kScan = 32;

    struct Sample {
        double x_star;
        double mismatch;
        OrbitPhases phases;
        Vec4 dir;
    };
    auto eval = [&](double x_star) -> std::optional<Sample> {
        const auto dir = level_set_direction(pr, x_star);
        if (!dir) return std::nullopt;
        const auto ph = orbit_phases(pr, *dir);
        if (!ph) return std::nullopt;
        return Sample{x_star, wrap_half((ph->t01 - ph->t12) / ph->period), *ph, *dir};
    };
    auto emit = [&](const Sample& s) {
        // Clockwise traversal with P0 -> P1 in one time unit, and the reversed
        // (counterclockwise) orbit with the complementary passage.
        const double dt = pr.times[1] - pr.times[0];
        seeds.push_back(s.phases.t01 / dt * s.dir);
        seeds.push_back(-(s.phases.period - s.phases.t01) / dt * s.dir);
    };

    std::optional<Sample> prev;
    for (int i = 0; i <= kScan; ++i) {
        const double x_star = std::exp(lo + (hi - lo) * i / kScan);
        const auto cur = eval(x_star);
        if (cur && prev && (cur->mismatch > 0.0) != (prev->mismatch > 0.0) && std::abs(cur->mismatch) < 0.25 &&
            std::abs(prev->mismatch) < 0.25) {
            Sample a = *prev, b = *cur;
            for (int k = 0; k < 40; ++k) {
                const auto mid = eval(0.5 * (a.x_star + b.x_star));
                if (!mid) break;
                ((mid->mismatch > 0.0) == (a.mismatch > 0.0) ? a : b) = *mid;
            }
            emit(std::abs(a.mismatch) < std::abs(b.mismatch) ? a : b);
        }
        prev = cur;
    }
}

// P2 == P0: orbits through P0, P1 with P0 -> P1 taking half a period.
void continuum_seeds(const InverseProblem& pr, std::vector<Vec4>& seeds) {
    const double xmin = std::min(pr.p0.x(), pr.p1.x()), xmax = std::max(pr.p0.x(), pr.p1.x());
    const double ymin = std::min(pr.p0.y(), pr.p1.y()), ymax = std::max(pr.p0.y(), pr.p1.y());
    auto eval = [&](double xs, double ys) -> std::optional<std::pair<double, Vec4>> {
        const double den = (pr.p1.x() - pr.p0.x()) - xs * std::log(pr.p1.x() / pr.p0.x());
        if (std::abs(den) < 1e-12) return std::nullopt;
        const double r = ((pr.p1.y() - pr.p0.y()) - ys * std::log(pr.p1.y() / pr.p0.y())) / den;
        if (!(r < 0.0)) return std::nullopt;
        const Vec4 dir{-ys, 1.0, r, -r * xs};
        const auto ph = orbit_phases(InverseProblem{pr.p0, pr.p1, pr.p1, pr.family, pr.family_param, pr.times}, dir);
        if (!ph) return std::nullopt;
        return std::pair{ph->t01 / ph->period - 0.5, dir * (ph->t01 / (pr.times[1] - pr.times[0]))};
    };
    constexpr int kX = 10, kY = 12;
    for (int i = 0; i < kX; ++i) {
        const double xs = 0.5 * xmin + (1.5 * xmax - 0.5 * xmin) * (i + 0.5) / kX;
        std::optional<std::pair<double, Vec4>> prev;
        double prev_y = 0.0;
        for (int j = 0; j <= kY; ++j) {
            const double ys = ymin * 0.5 + (ymax * 1.5 - ymin * 0.5) * j / kY;
            const auto cur = eval(xs, ys);
            if (cur && prev && (cur->first > 0.0) != (prev->first > 0.0)) {
                double a = prev_y, b = ys;
                double fa = prev->first;
                std::pair<double, Vec4> best = *cur;
                for (int k = 0; k < 30; ++k) {
                    const double m = 0.5 * (a + b);
                    const auto mid = eval(xs, m);
                    if (!mid) break;
                    best = *mid;
                    if ((mid->first > 0.0) == (fa > 0.0)) {
                        a = m;
                        fa = mid->first;
                    } else {
                        b = m;
                    }
                }
                seeds.push_back(best.second);
                seeds.push_back(-best.second);
            }
            prev = cur;
            prev_y = ys;
        }
    }
}

} // namespace

std::vector<Vec4> seed_list(const InverseProblem& problem, const MultiStartOptions& opts) {
    problem.validate();
    std::vector<Vec4> seeds = opts.extra_seeds;
    const Vec4 ll = log_linear_seed(problem);
    if (ll.allFinite()) seeds.push_back(ll);
    if (const auto aff = affine_seed(problem, ll.allFinite() ? ll : Vec4::Zero())) seeds.push_back(*aff);

    const bool coincident = (problem.p2 - problem.p0).norm() <= 1e-12 * problem.scale();
    if (opts.use_hamiltonian && problem.family == lv::Family::Plain) {
        if (coincident) continuum_seeds(problem, seeds);
        else hamiltonian_seeds(problem, seeds);
    }
    if (opts.use_lattice) {
        constexpr std::array<double, 5> kLevels{-2.0, -0.5, 0.0, 0.5, 2.0};
        for (double a1 : kLevels)
            for (double b1 : kLevels)
                for (double b2 : kLevels)
                    for (double a2 : kLevels) seeds.push_back(Vec4{a1, b1, b2, a2});
    }
    return seeds;
}

SolutionSet multi_start(const InverseProblem& problem, const MultiStartOptions& opts) {
    problem.validate();
    SolutionSet set;
    set.continuum = (problem.p2 - problem.p0).norm() <= 1e-12 * problem.scale();
    const std::vector<Vec4> seeds = seed_list(problem, opts);
    const std::size_t lattice_begin = opts.use_lattice ? seeds.size() - 625 : seeds.size();

    std::vector<LVSolution> found;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        ++set.census.seeds;
        const ShootOptions& so = i >= lattice_begin ? opts.lattice_shoot : opts.shoot;
        const ShootOutcome out = shoot(problem, seeds[i], so);
        if (out.solution) {
            const bool dup = std::any_of(found.begin(), found.end(), [&](const LVSolution& s) {
                return near(s.theta(), out.solution->theta(), opts.dedup_radius);
            });
            if (dup) {
                ++set.census.duplicates;
            } else {
                ++set.census.converged;
                found.push_back(*out.solution);
            }
            if (opts.stop_at_first) break;
        } else if (out.failure == ErrorCode::IntegrationBlowup) {
            ++set.census.blowup;
        } else if (out.iterations <= 1) {
            ++set.census.integration_failure;
        } else {
            ++set.census.no_convergence;
        }
    }
    set.solutions = opts.canonicalize ? canonicalize(problem, std::move(found), opts.dedup_radius) : std::move(found);
    if (!opts.canonicalize) {
        std::sort(set.solutions.begin(), set.solutions.end(),
                  [](const LVSolution& a, const LVSolution& b) { return lex_less(a.theta(), b.theta()); });
    }
    return set;
}

} // namespace trajid::shooting
