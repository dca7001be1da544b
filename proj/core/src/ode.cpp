#include "trajid/ode.hpp"

#include "dopri5.hpp"
#include "trajid/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace trajid::ode {

namespace {

void check_inputs(const VectorField& field, const Vec& x0, const Vec& theta) {
    if (x0.size() != field.dimension) throw Error(ErrorCode::DomainError, "initial state has wrong dimension");
    if (theta.size() != field.parameter_count) {
        throw Error(ErrorCode::DomainError, "parameter vector has wrong dimension");
    }
    if (!x0.allFinite() || !theta.allFinite()) throw Error(ErrorCode::DomainError, "non-finite input");
}

void check_tolerance(const IntegratorOptions& opts) {
    if (!(opts.tol.absolute > 0.0) || !(opts.tol.relative > 0.0)) {
        throw Error(ErrorCode::DomainError, "tolerances must be positive");
    }
}

struct StateRhs {
    const VectorField& field;
    std::span<const double> theta;
    int n;
    void operator()(double /*t*/, const double* y, double* dy) const {
        field.rate({y, static_cast<std::size_t>(n)}, theta, {dy, static_cast<std::size_t>(n)});
    }
};

// Augmented state [x; vec_rowmajor(S)] with S n x q.
struct SensitivityRhs {
    const VectorField& field;
    std::span<const double> theta;
    int n;
    int q;
    mutable std::vector<double> jx;
    mutable std::vector<double> jp;

    SensitivityRhs(const VectorField& f, std::span<const double> th)
        : field(f), theta(th), n(f.dimension), q(f.parameter_count),
          jx(static_cast<std::size_t>(n) * n), jp(static_cast<std::size_t>(n) * q) {}

    void operator()(double /*t*/, const double* y, double* dy) const {
        const std::span<const double> x{y, static_cast<std::size_t>(n)};
        field.rate(x, theta, {dy, static_cast<std::size_t>(n)});
        field.state_jacobian(x, theta, jx);
        field.parameter_jacobian(x, theta, jp);
        const double* s = y + n;
        double* ds = dy + n;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < q; ++j) {
                double acc = jp[static_cast<std::size_t>(i) * q + j];
                for (int k = 0; k < n; ++k) acc += jx[static_cast<std::size_t>(i) * n + k] * s[k * q + j];
                ds[i * q + j] = acc;
            }
        }
    }
};

void validate_samples(std::span<const double> sample_times) {
    double prev = -1.0;
    for (double t : sample_times) {
        if (!(t >= 0.0) || !(t > prev) || !std::isfinite(t)) {
            throw Error(ErrorCode::DomainError, "sample times must be increasing and non-negative");
        }
        prev = t;
    }
}

} // namespace

Vec Trajectory::state(std::size_t i) const {
    Vec v(n_);
    for (int k = 0; k < n_; ++k) v[k] = states_[i * n_ + k];
    return v;
}

Vec Trajectory::at(double t) const {
    if (times_.empty()) throw Error(ErrorCode::DomainError, "empty trajectory");
    if (t < 0.0 || t > t_end() * (1.0 + 1e-14) + 1e-300) {
        throw Error(ErrorCode::DomainError, "query time outside the integrated interval");
    }
    if (times_.size() == 1) return state(0);
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t step = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
    step = std::min(step, times_.size() - 2);
    const detail::DenseStep ds{times_[step], times_[step + 1] - times_[step], coeffs_.data() + step * 5 * n_, n_};
    Vec out(n_);
    ds.eval(t, out.data());
    return out;
}

Trajectory integrate(const VectorField& field, const Vec& x0, const Vec& theta, double t_end,
                     const IntegratorOptions& opts) {
    check_inputs(field, x0, theta);
    check_tolerance(opts);
    if (!(t_end > 0.0)) throw Error(ErrorCode::DomainError, "t_end must be positive");
    const int n = field.dimension;

    Trajectory traj;
    traj.n_ = n;
    traj.tol_ = opts.tol;
    traj.times_.push_back(0.0);
    traj.states_.assign(x0.data(), x0.data() + n);

    std::vector<double> y(x0.data(), x0.data() + n);
    detail::Dopri5 stepper(n, n, opts);
    const std::span<const double> th{theta.data(), static_cast<std::size_t>(theta.size())};
    stepper.run(StateRhs{field, th, n}, y, 0.0, t_end, {}, [&](const detail::DenseStep& ds, const double* yn) {
        traj.times_.push_back(ds.t0 + ds.h);
        traj.states_.insert(traj.states_.end(), yn, yn + n);
        traj.coeffs_.insert(traj.coeffs_.end(), ds.rcont, ds.rcont + 5 * n);
        return true;
    });
    traj.times_.back() = t_end;
    return traj;
}

Trajectory integrate_until_return(const VectorField& field, const Vec& x0, const Vec& theta, double period,
                                  const IntegratorOptions& opts) {
    return integrate(field, x0, theta, period, opts);
}

std::vector<Vec> integrate_samples(const VectorField& field, const Vec& x0, const Vec& theta,
                                   std::span<const double> sample_times, const IntegratorOptions& opts) {
    check_inputs(field, x0, theta);
    check_tolerance(opts);
    validate_samples(sample_times);
    const int n = field.dimension;
    std::vector<Vec> out;
    out.reserve(sample_times.size());
    std::size_t next = 0;
    while (next < sample_times.size() && sample_times[next] == 0.0) {
        out.push_back(x0);
        ++next;
    }
    if (next == sample_times.size()) return out;

    std::vector<double> y(x0.data(), x0.data() + n);
    detail::Dopri5 stepper(n, n, opts);
    const std::span<const double> th{theta.data(), static_cast<std::size_t>(theta.size())};
    stepper.run(StateRhs{field, th, n}, y, 0.0, sample_times.back(), sample_times,
                [&](const detail::DenseStep& ds, const double* yn) {
                    const double t = ds.t0 + ds.h;
                    while (next < sample_times.size() && sample_times[next] == t) {
                        out.push_back(Eigen::Map<const Vec>(yn, n));
                        ++next;
                    }
                    return true;
                });
    if (out.size() != sample_times.size()) throw Error(ErrorCode::DomainError, "sample time not reached");
    return out;
}

SensitivityBundle integrate_with_sensitivities(const VectorField& field, const Vec& x0, const Vec& theta,
                                               std::span<const double> sample_times, const IntegratorOptions& opts) {
    check_inputs(field, x0, theta);
    check_tolerance(opts);
    validate_samples(sample_times);
    const int n = field.dimension;
    const int q = field.parameter_count;
    const int dim = n + n * q;

    SensitivityBundle out;
    auto record = [&](double t, const double* y) {
        out.times.push_back(t);
        out.states.emplace_back(Eigen::Map<const Vec>(y, n));
        Mat s(n, q);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < q; ++j) s(i, j) = y[n + i * q + j];
        }
        out.sensitivities.push_back(std::move(s));
    };

    std::vector<double> y(static_cast<std::size_t>(dim), 0.0);
    std::copy(x0.data(), x0.data() + n, y.begin());
    std::size_t next = 0;
    while (next < sample_times.size() && sample_times[next] == 0.0) {
        record(0.0, y.data());
        ++next;
    }
    if (next == sample_times.size()) return out;

    detail::Dopri5 stepper(dim, n, opts);
    const std::span<const double> th{theta.data(), static_cast<std::size_t>(theta.size())};
    stepper.run(SensitivityRhs{field, th}, y, 0.0, sample_times.back(), sample_times,
                [&](const detail::DenseStep& ds, const double* yn) {
                    const double t = ds.t0 + ds.h;
                    while (next < sample_times.size() && sample_times[next] == t) {
                        record(t, yn);
                        ++next;
                    }
                    return true;
                });
    if (out.times.size() != sample_times.size()) throw Error(ErrorCode::DomainError, "sample time not reached");
    return out;
}

std::optional<double> first_upward_crossing(const VectorField& field, const Vec& x0, const Vec& theta,
                                            const Vec& point, const Vec& normal, double t_max, bool after_downward,
                                            const IntegratorOptions& opts, double time_tol) {
    check_inputs(field, x0, theta);
    check_tolerance(opts);
    const int n = field.dimension;
    auto g = [&](const double* y) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += normal[i] * (y[i] - point[i]);
        return acc;
    };

    std::vector<double> y(x0.data(), x0.data() + n);
    double g_prev = g(y.data());
    bool been_below = g_prev < 0.0;
    std::optional<double> hit;
    std::vector<double> tmp(static_cast<std::size_t>(n));
    detail::Dopri5 stepper(n, n, opts);
    const std::span<const double> th{theta.data(), static_cast<std::size_t>(theta.size())};
    stepper.run(StateRhs{field, th, n}, y, 0.0, t_max, {}, [&](const detail::DenseStep& ds, const double* yn) {
        const double g_new = g(yn);
        const bool armed = !after_downward || been_below;
        if (armed && g_prev < 0.0 && g_new >= 0.0) {
            double lo = ds.t0;
            double hi = ds.t0 + ds.h;
            while (hi - lo > time_tol) {
                const double mid = 0.5 * (lo + hi);
                ds.eval(mid, tmp.data());
                (g(tmp.data()) < 0.0 ? lo : hi) = mid;
            }
            hit = 0.5 * (lo + hi);
            return false;
        }
        if (g_new < 0.0) been_below = true;
        g_prev = g_new;
        return true;
    });
    return hit;
}

double find_period(const VectorField& field, const Vec& x0, const Vec& theta, const PeriodOptions& opts) {
    check_inputs(field, x0, theta);
    const int n = field.dimension;
    Vec f0(n);
    field.rate({x0.data(), static_cast<std::size_t>(n)}, {theta.data(), static_cast<std::size_t>(theta.size())},
               {f0.data(), static_cast<std::size_t>(n)});
    const double scale = std::max(1.0, x0.norm());
    if (!(f0.norm() > 1e-12 * scale)) throw Error(ErrorCode::NotPeriodic, "initial point is an equilibrium");

    std::optional<double> period;
    try {
        period = first_upward_crossing(field, x0, theta, x0, f0, opts.max_time, true, opts.integrator);
    } catch (const Error& e) {
        throw Error(ErrorCode::NotPeriodic, std::string("integration failed: ") + e.what());
    }
    if (!period) throw Error(ErrorCode::NotPeriodic, "no return to the section");

    const std::array<double, 1> sample{*period};
    const Vec back = integrate_samples(field, x0, theta, sample, opts.integrator).front();
    if ((back - x0).norm() > opts.return_tol * std::max(x0.norm(), 1e-300)) {
        throw Error(ErrorCode::NotPeriodic, "return point mismatch " + std::to_string((back - x0).norm()));
    }
    return *period;
}

} // namespace trajid::ode
