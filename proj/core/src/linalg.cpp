#include "trajid/linalg.hpp"

#include "trajid/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace trajid::linalg {

namespace {

constexpr double kClusterTol = 1e-7;
constexpr double kRealTol = 1e-10;
constexpr double kZeroTol = 1e-12;

void require_square(const Mat& m, const char* who) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw Error(ErrorCode::DomainError, std::string(who) + ": matrix must be square and non-empty");
    }
}

bool is_real(Complex z) { return std::abs(z.imag()) <= kRealTol * std::max(1.0, std::abs(z)); }

// Eigenvalue at index i and the index of its conjugate partner (i itself
// when real). Eigen's real solver stores pairs adjacently.
int conjugate_partner(const Eigen::VectorXcd& evals, int i) {
    if (is_real(evals[i])) return i;
    const int n = static_cast<int>(evals.size());
    if (i + 1 < n && std::abs(evals[i + 1] - std::conj(evals[i])) <= kClusterTol * std::max(1.0, std::abs(evals[i]))) {
        return i + 1;
    }
    if (i > 0 && std::abs(evals[i - 1] - std::conj(evals[i])) <= kClusterTol * std::max(1.0, std::abs(evals[i]))) {
        return i - 1;
    }
    throw Error(ErrorCode::DegenerateSpectrum, "complex eigenvalue without conjugate partner");
}

} // namespace

int Spectrum::dimension() const noexcept {
    int n = 0;
    for (int m : multiplicities) n += m;
    return n;
}

std::string_view to_string(SpectralClass c) noexcept {
    switch (c) {
        case SpectralClass::AllPositiveOrComplex: return "AllPositiveOrComplex";
        case SpectralClass::DistinctPositiveReal: return "DistinctPositiveReal";
        case SpectralClass::NegativeOddMultiplicity: return "NegativeOddMultiplicity";
        case SpectralClass::ZeroEigenvalue: return "ZeroEigenvalue";
        case SpectralClass::Degenerate: return "Degenerate";
    }
    return "Unknown";
}

double condition_number(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return 1.0;
    const double smin = s[s.size() - 1];
    return smin == 0.0 ? std::numeric_limits<double>::infinity() : s[0] / smin;
}

Mat invert(const Mat& m) {
    require_square(m, "invert");
    const auto n = static_cast<int>(m.rows());
    const double scale = m.cwiseAbs().maxCoeff();
    if (!std::isfinite(scale)) throw Error(ErrorCode::DomainError, "invert: non-finite entries");
    Eigen::FullPivLU<Mat> lu(m);
    const double det = lu.determinant();
    if (scale == 0.0 || std::abs(det) <= 1e-14 * std::pow(scale, n)) {
        throw Error(ErrorCode::SingularMatrix, "determinant below tolerance relative to entry scale");
    }
    return lu.inverse();
}

Spectrum spectrum(const Mat& m) {
    require_square(m, "spectrum");
    Eigen::EigenSolver<Mat> es(m, true);
    if (es.info() != Eigen::Success) {
        throw Error(ErrorCode::NonConvergence, "eigenvalue iteration failed");
    }
    const Eigen::VectorXcd evals = es.eigenvalues();
    const Eigen::MatrixXcd evecs = es.eigenvectors();

    // Cluster eigenvalues, then list each conjugate pair upper member first.
    std::vector<Complex> values;
    std::vector<int> mults;
    std::vector<bool> used(static_cast<std::size_t>(evals.size()), false);
    for (int i = 0; i < evals.size(); ++i) {
        if (used[i]) continue;
        const Complex lam = is_real(evals[i]) ? Complex(evals[i].real(), 0.0) : evals[i];
        const double tol = kClusterTol * std::max(1.0, std::abs(lam));
        int mult = 0;
        for (int j = i; j < evals.size(); ++j) {
            if (!used[j] && std::abs(evals[j] - evals[i]) <= tol) {
                used[j] = true;
                ++mult;
            }
        }
        values.push_back(lam);
        mults.push_back(mult);
    }
    Spectrum s;
    std::vector<bool> placed(values.size(), false);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (placed[i] || values[i].imag() < 0.0) continue;
        placed[i] = true;
        s.eigenvalues.push_back(values[i]);
        s.multiplicities.push_back(mults[i]);
        if (values[i].imag() == 0.0) continue;
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (!placed[j] && std::abs(values[j] - std::conj(values[i])) <= kClusterTol * std::max(1.0, std::abs(values[i]))) {
                placed[j] = true;
                s.eigenvalues.push_back(values[j]);
                s.multiplicities.push_back(mults[j]);
                break;
            }
        }
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!placed[i]) {
            s.eigenvalues.push_back(values[i]);
            s.multiplicities.push_back(mults[i]);
        }
    }

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(evecs);
    const auto& sv = svd.singularValues();
    const double smin = sv[sv.size() - 1];
    s.eigenvector_condition = smin > 0.0 ? sv[0] / smin : std::numeric_limits<double>::infinity();
    s.diagonalizable = s.eigenvector_condition <= kDiagonalizableCondLimit;
    return s;
}

SpectralClass classify_spectrum(const Spectrum& s) {
    double scale = 1.0;
    for (const auto& lam : s.eigenvalues) scale = std::max(scale, std::abs(lam));

    bool negative_odd = false;
    bool negative_even = false;
    bool zero = false;
    bool complex = false;
    bool repeated = false;
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
        const Complex lam = s.eigenvalues[i];
        const int mult = s.multiplicities[i];
        if (std::abs(lam) <= kZeroTol * scale) {
            zero = true;
        } else if (is_real(lam)) {
            if (lam.real() < 0.0) (mult % 2 == 1 ? negative_odd : negative_even) = true;
        } else {
            complex = true;
        }
        if (mult > 1) repeated = true;
    }
    if (negative_odd) return SpectralClass::NegativeOddMultiplicity;
    if (zero) return SpectralClass::ZeroEigenvalue;
    if (!s.diagonalizable || negative_even) return SpectralClass::Degenerate;
    if (!complex && !repeated) return SpectralClass::DistinctPositiveReal;
    return SpectralClass::AllPositiveOrComplex;
}

Mat expm(const Mat& m) {
    require_square(m, "expm");
    static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                   1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                   670442572800.0,      33522128640.0,       1323241920.0,
                                   40840800.0,          960960.0,            16380.0,
                                   182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    const auto n = m.rows();
    const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
    if (!std::isfinite(norm1)) throw Error(ErrorCode::DomainError, "expm: non-finite entries");
    int squarings = 0;
    if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    const Mat a = m / std::ldexp(1.0, squarings);

    const Mat id = Mat::Identity(n, n);
    const Mat a2 = a * a;
    const Mat a4 = a2 * a2;
    const Mat a6 = a4 * a2;
    const Mat u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    const Mat v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
    Mat r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < squarings; ++k) r = r * r;
    return r;
}

std::vector<LogBranch> real_log_branches(const Mat& m, int max_winding) {
    require_square(m, "real_log_branches");
    if (max_winding < 0) throw Error(ErrorCode::DomainError, "max_winding must be non-negative");

    const Spectrum s = spectrum(m);
    double scale = 1.0;
    for (const auto& lam : s.eigenvalues) scale = std::max(scale, std::abs(lam));
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
        const Complex lam = s.eigenvalues[i];
        if (std::abs(lam) <= kZeroTol * scale) {
            throw Error(ErrorCode::ZeroEigenvalue, "matrix has a zero eigenvalue");
        }
        if (is_real(lam) && lam.real() < 0.0) {
            throw Error(ErrorCode::NoRealLog, s.multiplicities[i] % 2 == 1
                                                  ? "negative eigenvalue of odd multiplicity"
                                                  : "negative eigenvalue of even multiplicity (unsupported)");
        }
    }
    if (!s.diagonalizable) {
        throw Error(ErrorCode::DegenerateSpectrum, "matrix is not diagonalizable at tolerance");
    }

    const double mnorm = m.norm();
    auto verified = [&](const Mat& log) {
        const double err = (expm(log) - m).norm();
        if (!(err <= 1e-9 * mnorm)) {
            throw Error(ErrorCode::DegenerateSpectrum,
                        "logarithm failed exp-verification (residual " + std::to_string(err) + ")");
        }
        return log;
    };

    Eigen::EigenSolver<Mat> es(m, true);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "eigenvalue iteration failed");
    const Eigen::VectorXcd evals = es.eigenvalues();
    const Eigen::MatrixXcd evecs = es.eigenvectors();
    const auto n = static_cast<int>(evals.size());

    bool all_real = true;
    for (int i = 0; i < n; ++i) all_real = all_real && is_real(evals[i]);

    if (all_real) {
        const Mat vr = evecs.real();
        Vec logs(n);
        for (int i = 0; i < n; ++i) logs[i] = std::log(evals[i].real());
        const Mat log = vr * logs.asDiagonal() * vr.partialPivLu().inverse();
        return {LogBranch{verified(log), {}}};
    }

    // Indices of the upper member of each conjugate pair.
    std::vector<int> upper;
    std::vector<int> partner(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        partner[i] = conjugate_partner(evals, i);
        if (partner[i] != i && evals[i].imag() > 0.0) upper.push_back(i);
    }

    std::vector<int> ks;
    ks.push_back(0);
    for (int k = 1; k <= max_winding; ++k) {
        ks.push_back(-k);
        ks.push_back(k);
    }

    const Eigen::MatrixXcd vinv = evecs.inverse();
    std::vector<LogBranch> out;
    std::vector<std::vector<int>> combos;
    // Enumerate the cartesian product of windings, principal first.
    std::vector<std::size_t> idx(upper.size(), 0);
    while (true) {
        std::vector<int> w(upper.size());
        for (std::size_t p = 0; p < upper.size(); ++p) w[p] = ks[idx[p]];
        combos.push_back(std::move(w));
        std::size_t p = 0;
        while (p < idx.size() && ++idx[p] == ks.size()) idx[p++] = 0;
        if (p == idx.size()) break;
    }
    std::stable_sort(combos.begin(), combos.end(), [](const auto& a, const auto& b) {
        int sa = 0, sb = 0;
        for (int v : a) sa += std::abs(v);
        for (int v : b) sb += std::abs(v);
        if (sa != sb) return sa < sb;
        return a < b;
    });

    for (const auto& w : combos) {
        Eigen::VectorXcd logs(n);
        for (int i = 0; i < n; ++i) logs[i] = std::log(evals[i]);
        for (std::size_t p = 0; p < upper.size(); ++p) {
            const int i = upper[p];
            const Complex offset(0.0, 2.0 * std::numbers::pi * w[p]);
            logs[i] = std::log(evals[i]) + offset;
            logs[partner[i]] = std::conj(logs[i]);
        }
        const Eigen::MatrixXcd lc = evecs * logs.asDiagonal() * vinv;
        const double imag = lc.imag().norm();
        if (imag > 1e-8 * std::max(1.0, lc.real().norm())) {
            throw Error(ErrorCode::DegenerateSpectrum, "real-ification of the logarithm failed");
        }
        out.push_back(LogBranch{verified(lc.real()), w});
    }
    return out;
}

} // namespace trajid::linalg
