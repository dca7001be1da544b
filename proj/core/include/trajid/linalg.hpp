#pragma once

// Dense small-matrix primitives: inversion, spectra and spectral classes, and
// the real matrix logarithm with winding-branch enumeration.

#include <Eigen/Dense>

#include <complex>
#include <string_view>
#include <vector>

namespace trajid::linalg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Complex = std::complex<double>;

/// Eigenvector-matrix condition number above which a matrix counts as
/// non-diagonalizable.
inline constexpr double kDiagonalizableCondLimit = 1e8;

struct Spectrum {
    /// Distinct eigenvalues (clustered at tolerance), conjugate pairs adjacent
    /// with the positive imaginary part first.
    std::vector<Complex> eigenvalues;
    std::vector<int> multiplicities;
    bool diagonalizable = true;
    double eigenvector_condition = 1.0;

    [[nodiscard]] int dimension() const noexcept;
};

enum class SpectralClass {
    AllPositiveOrComplex,
    DistinctPositiveReal,
    NegativeOddMultiplicity,
    ZeroEigenvalue,
    Degenerate,
};

std::string_view to_string(SpectralClass c) noexcept;

/// One real logarithm of a matrix. `windings` holds the 2*pi offset applied to
/// each complex-conjugate eigenvalue pair, in spectrum order.
struct LogBranch {
    Mat value;
    std::vector<int> windings;

    /// Winding of the first complex pair, 0 for purely real spectra.
    [[nodiscard]] int index() const noexcept { return windings.empty() ? 0 : windings.front(); }
};

Mat invert(const Mat& m);

Spectrum spectrum(const Mat& m);

SpectralClass classify_spectrum(const Spectrum& s);

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant.
Mat expm(const Mat& m);

/// Real logarithms of `m`: exactly one (the principal log) when every
/// eigenvalue is positive real, otherwise one branch per winding combination
/// k in [-max_winding, max_winding] for each complex pair. The principal
/// branch comes first; the rest are ordered by |k| then k.
std::vector<LogBranch> real_log_branches(const Mat& m, int max_winding);

/// Condition number in the 2-norm via SVD.
double condition_number(const Mat& m);

} // namespace trajid::linalg
