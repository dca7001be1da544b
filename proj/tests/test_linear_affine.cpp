#include "doctest.h"
#include "generators.hpp"
#include "oracles.hpp"

#include "trajid/error.hpp"
#include "trajid/linear_affine.hpp"

#include <random>

using namespace trajid;
using inverse::Mat;
using inverse::Vec;

namespace {

inverse::TimedDataSet data_from(const std::vector<Vec>& pts) { return {pts, {}}; }

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

// Solution whose A is closest to the reference; recovered sets may contain
// other windings.
double best_rel_err(const std::vector<inverse::LinearSolution>& sols, const Mat& ref) {
    double best = 1e300;
    for (const auto& s : sols) best = std::min(best, oracle::rel_err(s.a, ref));
    return best;
}

} // namespace

TEST_CASE("random systems round-trip through the inverse") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 2;
        const bool complex = trial % 4 >= 2;
        const auto sys = gen::random_system(rng, n, complex);
        const auto report = inverse::solve_linear(data_from(gen::samples(sys.a, sys.x0, n + 1)), 1);
        REQUIRE_FALSE(report.no_real_solution);
        CHECK(best_rel_err(report.solutions, sys.a) < 1e-8);
        if (!complex) CHECK(report.solutions.size() == 1);
        if (complex) CHECK(report.solutions.size() == 3);
    }
}

TEST_CASE("one-step map decides between one, many and no solutions") {
    // Phi = diag(2, 3) from x0 = (1, 1).
    const auto unique = inverse::solve_linear(data_from({v2(1, 1), v2(2, 3), v2(4, 9)}), 2);
    REQUIRE(unique.solutions.size() == 1);
    CHECK(std::abs(unique.solutions[0].a(0, 0) - std::log(2.0)) < 1e-12);
    CHECK(std::abs(unique.solutions[0].a(1, 1) - std::log(3.0)) < 1e-12);
    CHECK(unique.solutions[0].stability == inverse::Stability::UnstableNode);

    // Phi = rotation by 0.9.
    const double c = std::cos(0.9), s = std::sin(0.9);
    Mat phi(2, 2);
    phi << c, -s, s, c;
    for (int w : {0, 1, 2, 3}) {
        const auto many = inverse::solve_linear(data_from({v2(1, 0), v2(c, s), v2(c * c - s * s, 2 * c * s)}), w);
        CHECK(many.solutions.size() == static_cast<std::size_t>(2 * w + 1));
        for (const auto& sol : many.solutions)
            CHECK(oracle::rel_err(oracle::expm(sol.a), phi) < 1e-10);
    }

    // Phi = diag(-1, 2).
    const auto none = inverse::solve_linear(data_from({v2(1, 1), v2(-1, 2), v2(1, 4)}), 2);
    CHECK(none.no_real_solution);
    CHECK(none.solutions.empty());
}

TEST_CASE("similarity transforms carry over to the recovered matrix") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const auto sys = gen::random_system(rng, 2, trial % 2 == 1);
        const Mat s = gen::random_similarity(rng, 2, 100.0);
        auto pts = gen::samples(sys.a, sys.x0, 3);
        const auto base = inverse::solve_linear(data_from(pts), 0);
        for (auto& p : pts) p = s * p;
        const auto moved = inverse::solve_linear(data_from(pts), 0);
        REQUIRE(base.solutions.size() == 1);
        REQUIRE(moved.solutions.size() == 1);
        const Mat expected = s * base.solutions[0].a * s.inverse();
        CHECK(oracle::rel_err(moved.solutions[0].a, expected) < 1e-6);
        CHECK(oracle::rel_err(inverse::transform_linear(base.solutions[0], s).a, expected) < 1e-12);
    }
}

TEST_CASE("affine data from the analytic solution recovers A and c") {
    const Mat a = Eigen::Vector2d(-1.0, -2.0).asDiagonal();
    const Vec c = v2(1.0, 2.0);
    std::vector<Vec> pts;
    for (int k = 0; k < 4; ++k) pts.push_back(oracle::affine_at(a, c, v2(0, 0), k));
    // Closed form as a cross-check of the oracle.
    CHECK((pts[1] - v2(1 - std::exp(-1.0), 1 - std::exp(-2.0))).norm() < 1e-14);
    const auto sols = inverse::solve_affine(data_from(pts), 1);
    REQUIRE(sols.size() == 1);
    CHECK(oracle::rel_err(sols[0].a, a) < 1e-6);
    CHECK((sols[0].c - c).norm() < 1e-6 * c.norm());
    CHECK(sols[0].regime == inverse::AffineRegime::StableNode);
    const auto cls = inverse::classify_affine_regime(sols[0]);
    REQUIRE(cls.fixed_point);
    CHECK((*cls.fixed_point - v2(1.0, 1.0)).norm() < 1e-6);
}

TEST_CASE("affine transforms carry over to the recovered system") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const auto sys = gen::random_system(rng, 2, trial % 2 == 1);
        const Vec c = v2(nd(rng), nd(rng));
        const Mat s = gen::random_similarity(rng, 2, 100.0);
        const Vec r = v2(nd(rng), nd(rng));
        std::vector<Vec> pts, moved;
        for (int k = 0; k < 4; ++k) {
            pts.push_back(oracle::affine_at(sys.a, c, sys.x0, k));
            moved.push_back(s * pts.back() + r);
        }
        const auto base = inverse::solve_affine(data_from(pts), 0);
        const auto after = inverse::solve_affine(data_from(moved), 0);
        REQUIRE(base.size() == 1);
        REQUIRE(after.size() == 1);
        const Mat a_exp = s * sys.a * s.inverse();
        const Vec c_exp = s * (c - sys.a * s.inverse() * r);
        CHECK(oracle::rel_err(after[0].a, a_exp) < 1e-6);
        CHECK((after[0].c - c_exp).norm() < 1e-6 * std::max(1.0, c_exp.norm()));
        const auto mapped = inverse::transform_affine(base[0], s, r);
        CHECK(oracle::rel_err(mapped.a, after[0].a) < 1e-6);
        CHECK((mapped.c - after[0].c).norm() < 1e-6 * std::max(1.0, c_exp.norm()));
    }
}

TEST_CASE("degenerate inputs raise typed errors") {
    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        FAIL("expected an error");
        return ErrorCode::ConfigError;
    };
    CHECK(code_of([] { inverse::solve_linear(data_from({v2(1, 1), v2(2, 2), v2(3, 3)})); }) ==
          ErrorCode::LinearlyDependentData);
    inverse::TimedDataSet uneven{{v2(1, 1), v2(2, 3), v2(4, 9)}, {0.0, 1.0, 2.5}};
    CHECK(code_of([&] { inverse::solve_linear(uneven); }) == ErrorCode::NonUniformSpacing);
}

TEST_CASE("spacing other than one rescales the generator") {
    const auto unit = inverse::solve_linear(data_from({v2(1, 1), v2(2, 3), v2(4, 9)}));
    const auto half = inverse::solve_linear({{v2(1, 1), v2(2, 3), v2(4, 9)}, {0.0, 0.5, 1.0}});
    REQUIRE(unit.solutions.size() == 1);
    REQUIRE(half.solutions.size() == 1);
    CHECK(oracle::rel_err(half.solutions[0].a, 2.0 * unit.solutions[0].a) < 1e-12);
}

TEST_CASE("planar P2 regions") {
    using inverse::LinearRegion;
    const Vec p0 = v2(1, 1), p1 = v2(2, 3);
    CHECK(inverse::classify_linear_p2(p0, p1, v2(4, 9)) == LinearRegion::UnstableNode);
    CHECK(inverse::classify_linear_p2(p0, p1, v2(-1, 2)) != LinearRegion::UnstableNode);
    // Phi = diag(0.5, 0.25) from the same start.
    CHECK(inverse::classify_linear_p2(v2(1, 1), v2(0.5, 0.25), v2(0.25, 0.0625)) == LinearRegion::StableNode);
    // Phi = diag(-1, 2).
    CHECK(inverse::classify_linear_p2(v2(1, 1), v2(-1, 2), v2(1, 4)) == LinearRegion::DNE);
    // Phi = diag(0.5, 2).
    CHECK(inverse::classify_linear_p2(v2(1, 1), v2(0.5, 2), v2(0.25, 4)) == LinearRegion::Saddle);
}
