#include "trajid/linear_affine.hpp"

#include "trajid/error.hpp"
#include "trajid/ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace trajid::inverse {

namespace {

constexpr double kVerifyTol = 1e-7;
constexpr double kStructureTol = 1e-8;
constexpr double kSingularTol = 1e-10;

// Columns first..first+count-1 of the data as a matrix, each column
// optionally extended by a trailing 1.
Mat data_block(const TimedDataSet& d, std::size_t first, int count, bool augmented) {
    const int n = d.dimension();
    Mat m(augmented ? n + 1 : n, count);
    for (int k = 0; k < count; ++k) {
        m.col(k).head(n) = d.points[first + k];
        if (augmented) m(n, k) = 1.0;
    }
    return m;
}

Mat solve_right(const Mat& x1, const Mat& x0) {
    // X1 X0^{-1} with singularity reported as dependent data.
    try {
        return x1 * linalg::invert(x0);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SingularMatrix) {
            throw Error(ErrorCode::LinearlyDependentData, "data columns are linearly dependent");
        }
        throw;
    }
}

void check_points(const TimedDataSet& d, std::size_t expected) {
    if (d.points.empty()) throw Error(ErrorCode::DomainError, "empty data set");
    const int n = d.dimension();
    if (d.points.size() != expected) {
        throw Error(ErrorCode::DomainError, "expected " + std::to_string(expected) + " points in dimension " +
                                                std::to_string(n) + ", got " + std::to_string(d.points.size()));
    }
    for (const Vec& p : d.points) {
        if (p.size() != n || !p.allFinite()) throw Error(ErrorCode::DomainError, "inconsistent or non-finite point");
    }
    if (!d.times.empty() && d.times.size() != d.points.size()) {
        throw Error(ErrorCode::DomainError, "times and points differ in length");
    }
}

std::vector<linalg::LogBranch> logs_of(const Mat& m, int max_winding, bool allow_unipotent) {
    try {
        return linalg::real_log_branches(m, max_winding);
    } catch (const Error& e) {
        if (!allow_unipotent || e.code() != ErrorCode::DegenerateSpectrum) throw;
        // Unipotent maps (all eigenvalues 1, Jordan blocks allowed) still
        // have the finite series logarithm.
        const int n = static_cast<int>(m.rows());
        const Mat nil = m - Mat::Identity(n, n);
        Mat power = Mat::Identity(n, n);
        for (int k = 0; k < n; ++k) power = power * nil;
        if (power.norm() > 1e-10 * std::max(1.0, m.norm())) throw;
        Mat log = Mat::Zero(n, n);
        Mat term = Mat::Identity(n, n);
        for (int k = 1; k < n; ++k) {
            term = term * nil;
            log += ((k % 2 == 1) ? 1.0 : -1.0) / k * term;
        }
        return {linalg::LogBranch{log, {}}};
    }
}

} // namespace

int TimedDataSet::dimension() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }

double TimedDataSet::time(std::size_t i) const { return times.empty() ? static_cast<double>(i) : times[i]; }

double TimedDataSet::spacing() const {
    if (points.size() < 2) return 1.0;
    const double dt = time(1) - time(0);
    if (!(dt > 0.0)) throw Error(ErrorCode::DomainError, "times must be strictly increasing");
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double step = time(i) - time(i - 1);
        if (!(step > 0.0)) throw Error(ErrorCode::DomainError, "times must be strictly increasing");
        if (std::abs(step - dt) > 1e-12 * std::max(1.0, std::abs(dt))) {
            throw Error(ErrorCode::NonUniformSpacing, "sample times are not equally spaced");
        }
    }
    return dt;
}

std::string_view to_string(Stability s) noexcept {
    switch (s) {
    case Stability::StableNode: return "StableNode";
    case Stability::UnstableNode: return "UnstableNode";
    case Stability::StableSpiral: return "StableSpiral";
    case Stability::UnstableSpiral: return "UnstableSpiral";
    case Stability::Saddle: return "Saddle";
    case Stability::Center: return "Center";
    case Stability::Degenerate: return "Degenerate";
    }
    return "?";
}

std::string_view to_string(LinearRegion r) noexcept {
    switch (r) {
    case LinearRegion::DNE: return "DNE";
    case LinearRegion::Saddle: return "Saddle";
    case LinearRegion::StableNode: return "StableNode";
    case LinearRegion::UnstableNode: return "UnstableNode";
    case LinearRegion::StableSpiral: return "StableSpiral";
    case LinearRegion::UnstableSpiral: return "UnstableSpiral";
    case LinearRegion::Boundary: return "Boundary";
    }
    return "?";
}

std::string_view to_string(AffineRegime r) noexcept {
    switch (r) {
    case AffineRegime::StableNode: return "StableNode";
    case AffineRegime::UnstableNode: return "UnstableNode";
    case AffineRegime::StableSpiral: return "StableSpiral";
    case AffineRegime::UnstableSpiral: return "UnstableSpiral";
    case AffineRegime::Saddle: return "Saddle";
    case AffineRegime::Center: return "Center";
    case AffineRegime::River: return "River";
    case AffineRegime::Parabolic: return "Parabolic";
    case AffineRegime::Degenerate: return "Degenerate";
    }
    return "?";
}

Stability stability_of(const Mat& a) {
    const Eigen::EigenSolver<Mat> es(a, false);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "eigenvalue iteration failed");
    const double tol = kSingularTol * std::max(1.0, a.norm());
    int neg = 0, pos = 0, zero = 0;
    bool complex = false;
    for (const auto& ev : es.eigenvalues()) {
        if (std::abs(ev.imag()) > tol) complex = true;
        if (ev.real() > tol) ++pos;
        else if (ev.real() < -tol) ++neg;
        else ++zero;
    }
    if (zero > 0) {
        // Purely imaginary pairs with no real zero eigenvalue form a center.
        const bool all_imag = zero == a.rows() && complex &&
                              std::all_of(es.eigenvalues().begin(), es.eigenvalues().end(),
                                          [&](const auto& ev) { return std::abs(ev.imag()) > tol; });
        return all_imag ? Stability::Center : Stability::Degenerate;
    }
    if (pos > 0 && neg > 0) return Stability::Saddle;
    if (complex) return neg > 0 ? Stability::StableSpiral : Stability::UnstableSpiral;
    return neg > 0 ? Stability::StableNode : Stability::UnstableNode;
}

Mat phi_from_data(const TimedDataSet& d) {
    const int n = d.dimension();
    check_points(d, static_cast<std::size_t>(n) + 1);
    return solve_right(data_block(d, 1, n, false), data_block(d, 0, n, false));
}

LinearReport solve_linear(const TimedDataSet& d, int max_winding) {
    if (max_winding < 0) throw Error(ErrorCode::DomainError, "max_winding must be non-negative");
    const Mat phi = phi_from_data(d);
    const double dt = d.spacing();
    const int n = d.dimension();

    LinearReport report;
    const linalg::Spectrum spec = linalg::spectrum(phi);
    report.phi_class = linalg::classify_spectrum(spec);
    if (report.phi_class == SpectralClass::NegativeOddMultiplicity) {
        report.no_real_solution = true;
        return report;
    }
    std::vector<linalg::LogBranch> logs;
    try {
        logs = linalg::real_log_branches(phi, max_winding);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NoRealLog || e.code() == ErrorCode::ZeroEigenvalue) {
            report.no_real_solution = true;
            return report;
        }
        throw;
    }
    for (const auto& branch : logs) {
        LinearSolution sol;
        sol.a = branch.value / dt;
        sol.b = d.points.front();
        sol.branch = branch.index();
        sol.windings = branch.windings;
        sol.phi_class = report.phi_class;
        sol.stability = stability_of(sol.a);
        for (int j = 1; j <= n; ++j) {
            const Vec xj = linalg::expm(sol.a * (d.time(j) - d.time(0))) * sol.b;
            if ((xj - d.points[j]).norm() > kVerifyTol * std::max(d.points[j].norm(), 1e-300)) {
                throw Error(ErrorCode::DegenerateSpectrum, "logarithm branch fails to reproduce the data");
            }
        }
        report.solutions.push_back(std::move(sol));
    }
    return report;
}

LinearRegion classify_linear_p2(const Vec& p0, const Vec& p1, const Vec& p2) {
    if (p0.size() != 2 || p1.size() != 2 || p2.size() != 2) throw Error(ErrorCode::DomainError, "planar points expected");
    TimedDataSet d{{p0, p1, p2}, {}};
    const Mat phi = phi_from_data(d);
    const linalg::Spectrum spec = linalg::spectrum(phi);
    switch (linalg::classify_spectrum(spec)) {
    case SpectralClass::NegativeOddMultiplicity: return LinearRegion::DNE;
    case SpectralClass::ZeroEigenvalue:
    case SpectralClass::Degenerate: return LinearRegion::Boundary;
    default: break;
    }
    // Unit-modulus eigenvalues sit on the stable/unstable boundary.
    for (const auto& ev : spec.eigenvalues) {
        if (std::abs(std::abs(ev) - 1.0) <= 1e-12) return LinearRegion::Boundary;
    }
    const auto logs = linalg::real_log_branches(phi, 0);
    switch (stability_of(logs.front().value)) {
    case Stability::StableNode: return LinearRegion::StableNode;
    case Stability::UnstableNode: return LinearRegion::UnstableNode;
    case Stability::StableSpiral: return LinearRegion::StableSpiral;
    case Stability::UnstableSpiral: return LinearRegion::UnstableSpiral;
    case Stability::Saddle: return LinearRegion::Saddle;
    default: return LinearRegion::Boundary;
    }
}

LinearSolution transform_linear(const LinearSolution& sol, const Mat& s) {
    const Mat s_inv = linalg::invert(s);
    LinearSolution out = sol;
    out.a = s * sol.a * s_inv;
    out.b = s * sol.b;
    return out;
}

AffineClassification classify_affine_regime(const Mat& a, const Vec& c) {
    AffineClassification out;
    const Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double scale = std::max(1.0, sv.size() > 0 ? sv[0] : 0.0);
    const bool singular = sv.size() == 0 || sv[sv.size() - 1] <= kSingularTol * scale;
    if (!singular) {
        out.fixed_point = Vec(-svd.solve(c));
        switch (stability_of(a)) {
        case Stability::StableNode: out.regime = AffineRegime::StableNode; break;
        case Stability::UnstableNode: out.regime = AffineRegime::UnstableNode; break;
        case Stability::StableSpiral: out.regime = AffineRegime::StableSpiral; break;
        case Stability::UnstableSpiral: out.regime = AffineRegime::UnstableSpiral; break;
        case Stability::Saddle: out.regime = AffineRegime::Saddle; break;
        case Stability::Center: out.regime = AffineRegime::Center; break;
        case Stability::Degenerate: out.regime = AffineRegime::Degenerate; break;
        }
        return out;
    }
    // Component of c outside range(A): projection on the left null space.
    Vec outside = c;
    for (int i = 0; i < sv.size(); ++i) {
        if (sv[i] > kSingularTol * scale) outside -= svd.matrixU().col(i) * svd.matrixU().col(i).dot(c);
    }
    if (outside.norm() <= kSingularTol * std::max(1.0, c.norm())) {
        out.regime = AffineRegime::Degenerate; // a continuum of fixed points
        return out;
    }
    // No fixed point. A nilpotent non-zero A bends the translation into a
    // parabola; otherwise the flow is a river along the kernel direction.
    const int n = static_cast<int>(a.rows());
    Mat power = Mat::Identity(n, n);
    for (int k = 0; k < n; ++k) power = power * a;
    const bool nilpotent = power.norm() <= kSingularTol * std::pow(scale, n);
    const bool zero = a.norm() <= kSingularTol * scale;
    out.regime = nilpotent && !zero ? AffineRegime::Parabolic : AffineRegime::River;
    return out;
}

std::vector<AffineSolution> solve_affine(const TimedDataSet& d, int max_winding) {
    if (max_winding < 0) throw Error(ErrorCode::DomainError, "max_winding must be non-negative");
    const int n = d.dimension();
    check_points(d, static_cast<std::size_t>(n) + 2);
    const double dt = d.spacing();
    const Mat psi = solve_right(data_block(d, 1, n + 1, true), data_block(d, 0, n + 1, true));
    const linalg::Spectrum spec = linalg::spectrum(psi);
    if (linalg::classify_spectrum(spec) == SpectralClass::NegativeOddMultiplicity) {
        throw Error(ErrorCode::NoRealSolution, "augmented one-step map has a negative eigenvalue");
    }
    std::vector<linalg::LogBranch> logs;
    try {
        logs = logs_of(psi, max_winding, true);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NoRealLog || e.code() == ErrorCode::ZeroEigenvalue) {
            throw Error(ErrorCode::NoRealSolution, e.what());
        }
        throw;
    }

    std::vector<AffineSolution> out;
    for (const auto& branch : logs) {
        const Mat& l = branch.value;
        if (l.row(n).norm() > kStructureTol * std::max(l.norm(), 1e-300)) continue;
        AffineSolution sol;
        sol.a = l.topLeftCorner(n, n) / dt;
        sol.c = l.col(n).head(n) / dt;
        sol.b = d.points.front();
        sol.branch = branch.index();
        sol.regime = classify_affine_regime(sol.a, sol.c).regime;

        ode::VectorField field;
        field.dimension = n;
        field.parameter_count = 0;
        const Mat a = sol.a;
        const Vec c = sol.c;
        field.rate = [a, c, n](std::span<const double> x, std::span<const double>, std::span<double> out_rate) {
            Eigen::Map<Vec>(out_rate.data(), n) = a * Eigen::Map<const Vec>(x.data(), n) + c;
        };
        std::vector<double> times;
        for (std::size_t j = 1; j < d.points.size(); ++j) times.push_back(d.time(j) - d.time(0));
        ode::IntegratorOptions opts;
        opts.tol = {1e-13, 1e-13};
        const auto states = ode::integrate_samples(field, sol.b, Vec(0), times, opts);
        bool ok = true;
        for (std::size_t j = 1; j < d.points.size(); ++j) {
            const double scale = std::max(1.0, d.points[j].norm());
            if ((states[j - 1] - d.points[j]).norm() > kVerifyTol * scale) ok = false;
        }
        if (ok) out.push_back(std::move(sol));
    }
    if (out.empty()) throw Error(ErrorCode::StructureViolation, "no logarithm branch keeps the affine block structure");
    return out;
}

AffineSolution transform_affine(const AffineSolution& sol, const Mat& s, const Vec& r) {
    const Mat s_inv = linalg::invert(s);
    AffineSolution out = sol;
    out.a = s * sol.a * s_inv;
    out.c = s * (sol.c - sol.a * s_inv * r);
    out.b = s * sol.b + r;
    out.regime = classify_affine_regime(out.a, out.c).regime;
    return out;
}

} // namespace trajid::inverse
