#pragma once

// Dormand-Prince 5(4) stepper with Hairer's continuous extension. Internal to
// the ode module: the RHS and the step observer are template parameters so the
// inner loop inlines for the small systems this library integrates.

#include "trajid/error.hpp"
#include "trajid/ode.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace trajid::ode::detail {

struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    const double* rcont = nullptr; // 5*n coefficients
    int n = 0;

    void eval(double t, double* out) const {
        const double s = (t - t0) / h;
        const double s1 = 1.0 - s;
        const double* r1 = rcont;
        const double* r2 = rcont + n;
        const double* r3 = rcont + 2 * n;
        const double* r4 = rcont + 3 * n;
        const double* r5 = rcont + 4 * n;
        for (int i = 0; i < n; ++i) {
            out[i] = r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])));
        }
    }
};

class Dopri5 {
public:
    Dopri5(int n, int state_dim, const IntegratorOptions& opts)
        : n_(n), state_dim_(state_dim), opts_(opts), k_(7 * static_cast<std::size_t>(n)),
          ytmp_(n), ynew_(n), err_(n), rcont_(5 * static_cast<std::size_t>(n)) {}

    /// Advances y from t0 to t_end, landing exactly on each entry of `stops`
    /// (sorted, within (t0, t_end]). `observer(const DenseStep&, const double*
    /// y_new)` is called after every accepted step and returns false to stop.
    /// Returns the time reached.
    template <class Rhs, class Observer>
    double run(Rhs&& rhs, std::span<double> y, double t0, double t_end, std::span<const double> stops,
               Observer&& observer) {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                                a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                                a75 = -2187.0 / 6784, a76 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
        static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                                d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                                d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

        const int n = n_;
        double* k1 = k_.data();
        double* k2 = k1 + n;
        double* k3 = k2 + n;
        double* k4 = k3 + n;
        double* k5 = k4 + n;
        double* k6 = k5 + n;
        double* k7 = k6 + n;
        double* yt = ytmp_.data();
        double* yn = ynew_.data();
        double* ye = err_.data();

        double t = t0;
        if (t_end <= t0) return t0;
        rhs(t, y.data(), k1);
        double h_prop = opts_.initial_step > 0.0 ? opts_.initial_step : initial_step(rhs, y.data(), k1, t, t_end - t0);

        std::size_t next_stop = 0;
        while (next_stop < stops.size() && stops[next_stop] <= t0) ++next_stop;

        std::size_t steps = 0;
        bool last_rejected = false;
        while (t < t_end) {
            if (++steps > opts_.max_steps) {
                throw Error(ErrorCode::StepLimit, "step count exceeded " + std::to_string(opts_.max_steps));
            }
            double target = t_end;
            if (next_stop < stops.size()) target = std::min(target, stops[next_stop]);
            double h = h_prop;
            bool lands = false;
            if (t + h >= target - 1e-13 * std::max(1.0, std::abs(target))) {
                h = target - t;
                lands = true;
            }

            for (int i = 0; i < n; ++i) yt[i] = y[i] + h * a21 * k1[i];
            rhs(t + c2 * h, yt, k2);
            for (int i = 0; i < n; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
            rhs(t + c3 * h, yt, k3);
            for (int i = 0; i < n; ++i) yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            rhs(t + c4 * h, yt, k4);
            for (int i = 0; i < n; ++i) yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            rhs(t + c5 * h, yt, k5);
            for (int i = 0; i < n; ++i) {
                yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
            }
            const double tph = lands ? target : t + h;
            rhs(tph, yt, k6);
            for (int i = 0; i < n; ++i) {
                yn[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
            }
            rhs(tph, yn, k7);

            double err = 0.0;
            for (int i = 0; i < n; ++i) {
                ye[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                const double sc = opts_.tol.absolute + opts_.tol.relative * std::max(std::abs(y[i]), std::abs(yn[i]));
                const double r = ye[i] / sc;
                err += r * r;
            }
            err = std::sqrt(err / n);
            if (!std::isfinite(err)) {
                // Non-finite stage values: shrink hard and retry.
                h_prop = 0.1 * h;
                last_rejected = true;
                if (h_prop < opts_.min_step) throw Error(ErrorCode::StateBlowup, "non-finite state at t=" + std::to_string(t));
                continue;
            }

            if (err <= 1.0) {
                double* r1 = rcont_.data();
                double* r2 = r1 + n;
                double* r3 = r2 + n;
                double* r4 = r3 + n;
                double* r5 = r4 + n;
                for (int i = 0; i < n; ++i) {
                    const double dy = yn[i] - y[i];
                    const double bspl = h * k1[i] - dy;
                    r1[i] = y[i];
                    r2[i] = dy;
                    r3[i] = bspl;
                    r4[i] = dy - h * k7[i] - bspl;
                    r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
                }
                double snorm = 0.0;
                for (int i = 0; i < state_dim_; ++i) snorm = std::max(snorm, std::abs(yn[i]));
                if (!(snorm <= opts_.blowup_norm)) {
                    throw Error(ErrorCode::StateBlowup, "state norm exceeded " + std::to_string(opts_.blowup_norm) +
                                                            " at t=" + std::to_string(tph));
                }
                const DenseStep ds{t, h, rcont_.data(), n};
                t = tph;
                std::copy(yn, yn + n, y.data());
                std::copy(k7, k7 + n, k1);
                if (lands && next_stop < stops.size() && target == stops[next_stop]) ++next_stop;
                if (!observer(ds, y.data())) return t;

                double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
                fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
                // A step shortened to land on a stop keeps the larger proposal.
                h_prop = lands ? std::max(h_prop, h * fac) : h * fac;
                last_rejected = false;
            } else {
                h_prop = h * std::max(0.2, 0.9 * std::pow(err, -0.2));
                last_rejected = true;
                if (h_prop < opts_.min_step) {
                    throw Error(ErrorCode::StepUnderflow,
                                "step size " + std::to_string(h_prop) + " at t=" + std::to_string(t));
                }
            }
        }
        return t;
    }

private:
    template <class Rhs>
    double initial_step(Rhs& rhs, const double* y0, const double* f0, double t0, double span) {
        const int n = n_;
        double d0 = 0.0, d1 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double sc = opts_.tol.absolute + opts_.tol.relative * std::abs(y0[i]);
            d0 += (y0[i] / sc) * (y0[i] / sc);
            d1 += (f0[i] / sc) * (f0[i] / sc);
        }
        d0 = std::sqrt(d0 / n);
        d1 = std::sqrt(d1 / n);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, span);
        double* y1 = ytmp_.data();
        double* f1 = k_.data() + n; // k2 scratch
        for (int i = 0; i < n; ++i) y1[i] = y0[i] + h0 * f0[i];
        rhs(t0 + h0, y1, f1);
        double d2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double sc = opts_.tol.absolute + opts_.tol.relative * std::abs(y0[i]);
            const double r = (f1[i] - f0[i]) / sc;
            d2 += r * r;
        }
        d2 = std::sqrt(d2 / n) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        double h = std::min(100.0 * h0, h1);
        if (!std::isfinite(h) || h <= 0.0) h = 1e-6;
        return std::min(h, span);
    }

    int n_;
    int state_dim_;
    IntegratorOptions opts_;
    std::vector<double> k_;
    std::vector<double> ytmp_;
    std::vector<double> ynew_;
    std::vector<double> err_;
    std::vector<double> rcont_;
};

} // namespace trajid::ode::detail
