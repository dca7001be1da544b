#include "doctest.h"
#include "oracles.hpp"

#include "trajid/error.hpp"
#include "trajid/linalg.hpp"

#include <random>

using namespace trajid;
using linalg::Mat;

namespace {

Mat rotation(double angle, double radius = 1.0) {
    Mat r(2, 2);
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return radius * r;
}

} // namespace

TEST_CASE("expm agrees with the matrix-function oracle") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 3;
        Mat m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = (trial % 5 + 1) * nd(rng);
        CHECK(oracle::rel_err(linalg::expm(m), oracle::expm(m)) < 1e-12);
    }
}

TEST_CASE("expm of a nilpotent and a diagonal matrix") {
    Mat nil(2, 2);
    nil << 0.0, 3.0, 0.0, 0.0;
    Mat expected(2, 2);
    expected << 1.0, 3.0, 0.0, 1.0;
    CHECK((linalg::expm(nil) - expected).norm() < 1e-15);
    const Mat d = Eigen::Vector3d(-1.0, 0.5, 2.0).asDiagonal();
    CHECK((linalg::expm(d).diagonal() - Eigen::Vector3d(std::exp(-1.0), std::exp(0.5), std::exp(2.0))).norm() < 1e-13);
}

TEST_CASE("principal log is unique for distinct positive eigenvalues") {
    const Mat m = Eigen::Vector2d(2.0, 3.0).asDiagonal();
    const auto logs = linalg::real_log_branches(m, 3);
    REQUIRE(logs.size() == 1);
    CHECK(std::abs(logs[0].value(0, 0) - std::log(2.0)) < 1e-14);
    CHECK(std::abs(logs[0].value(1, 1) - std::log(3.0)) < 1e-14);
    CHECK(oracle::rel_err(logs[0].value, oracle::logm(m)) < 1e-12);
}

TEST_CASE("rotation logs come in 2k+1 windings, principal first") {
    const Mat m = rotation(0.7, 1.3);
    const auto logs = linalg::real_log_branches(m, 2);
    REQUIRE(logs.size() == 5);
    CHECK(logs[0].index() == 0);
    CHECK(oracle::rel_err(logs[0].value, oracle::logm(m)) < 1e-12);
    for (const auto& b : logs) {
        CHECK(oracle::rel_err(linalg::expm(b.value), m) < 1e-12);
        // Imaginary part of the eigenvalues: 0.7 + 2 pi k.
        const double omega = std::abs(b.value(1, 0) - b.value(0, 1)) / 2.0;
        CHECK(std::abs(omega - std::abs(0.7 + 2.0 * M_PI * b.index())) < 1e-10);
    }
    CHECK(std::abs(logs[1].index()) == 1);
    CHECK(std::abs(logs[3].index()) == 2);
}

TEST_CASE("spectral classes") {
    using linalg::SpectralClass;
    auto cls = [](const Mat& m) { return linalg::classify_spectrum(linalg::spectrum(m)); };
    CHECK(cls(Eigen::Vector2d(2.0, 3.0).asDiagonal()) == SpectralClass::DistinctPositiveReal);
    CHECK(cls(rotation(1.0)) == SpectralClass::AllPositiveOrComplex);
    CHECK(cls(Eigen::Vector2d(-1.0, 2.0).asDiagonal()) == SpectralClass::NegativeOddMultiplicity);
    CHECK(cls(Eigen::Vector2d(0.0, 2.0).asDiagonal()) == SpectralClass::ZeroEigenvalue);
    Mat jordan(2, 2);
    jordan << 2.0, 1.0, 0.0, 2.0;
    CHECK(cls(jordan) == SpectralClass::Degenerate);
}

TEST_CASE("log errors carry typed codes") {
    const Mat neg = Eigen::Vector2d(-1.0, 2.0).asDiagonal();
    try {
        linalg::real_log_branches(neg, 0);
        FAIL("expected NoRealLog");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoRealLog);
    }
    const Mat sing = Eigen::Vector2d(0.0, 1.0).asDiagonal();
    CHECK_THROWS_AS(linalg::invert(sing), Error);
    CHECK_THROWS_AS(linalg::real_log_branches(Mat::Identity(2, 2), -1), Error);
}

TEST_CASE("invert and condition number") {
    Mat m(2, 2);
    m << 4.0, 1.0, 2.0, 3.0;
    CHECK((linalg::invert(m) * m - Mat::Identity(2, 2)).norm() < 1e-14);
    const Mat d = Eigen::Vector2d(1.0, 1e-3).asDiagonal();
    CHECK(std::abs(linalg::condition_number(d) - 1e3) < 1e-9);
}

TEST_CASE("spectrum pairs conjugates and counts multiplicity") {
    const auto s = linalg::spectrum(rotation(0.3, 2.0));
    REQUIRE(s.eigenvalues.size() == 2);
    CHECK(s.eigenvalues[0].imag() > 0.0);
    CHECK(std::abs(s.eigenvalues[1] - std::conj(s.eigenvalues[0])) < 1e-14);
    const auto t = linalg::spectrum(Mat::Identity(3, 3) * 2.0);
    REQUIRE(t.eigenvalues.size() == 1);
    CHECK(t.multiplicities[0] == 3);
    CHECK(t.diagonalizable);
}
