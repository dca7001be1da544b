#include "doctest.h"
#include "oracles.hpp"

#include "trajid/error.hpp"
#include "trajid/shooting.hpp"

using namespace trajid;
using shooting::InverseProblem;
using shooting::Point;
using shooting::Vec4;

namespace {

double rk4_residual(const InverseProblem& pr, const Vec4& th) {
    const auto x1 = oracle::lv_at(th[0], th[1], th[2], th[3], pr.p0, 1.0);
    const auto x2 = oracle::lv_at(th[0], th[1], th[2], th[3], pr.p0, 2.0);
    return std::max((x1 - pr.p1).norm(), (x2 - pr.p2).norm());
}

} // namespace

TEST_CASE("residual Jacobian matches central differences") {
    InverseProblem pr;
    const Vec4 th(1.1, -0.4, 0.6, -0.5);
    const auto ev = shooting::evaluate_residual(pr, th, 1e-12);
    const double h = 1e-6;
    for (int j = 0; j < 4; ++j) {
        Vec4 tp = th, tm = th;
        tp[j] += h;
        tm[j] -= h;
        const Vec4 fd = (shooting::residual_only(pr, tp, 1e-12) - shooting::residual_only(pr, tm, 1e-12)) / (2 * h);
        CHECK((ev.jac_theta.col(j) - fd).norm() < 1e-5 * std::max(1.0, fd.norm()));
    }
}

TEST_CASE("Newton returns to an exact beta-zero solution from a perturbed start") {
    InverseProblem pr;
    pr.p2 = {4.0, 2.0};
    const auto exact = lv::beta1_zero_solution(pr.p0, pr.p1, 2.0);
    const auto out = shooting::shoot(pr, exact.theta() + Vec4(0.05, 0.03, -0.04, 0.02));
    REQUIRE(out.solution);
    CHECK((out.solution->theta() - exact.theta()).norm() < 1e-7);
    CHECK(out.solution->residual <= 1e-8);
}

TEST_CASE("default problem: periodic predator-prey solution, independently verified") {
    InverseProblem pr;
    const auto set = shooting::multi_start(pr);
    REQUIRE_FALSE(set.solutions.empty());
    bool found = false;
    for (const auto& s : set.solutions) {
        CHECK(rk4_residual(pr, s.theta()) < 1e-7);
        if (s.signature.str() == "+-+-" && s.periodic() && s.canonical) found = true;
    }
    CHECK(found);
    CHECK(set.census.seeds >= set.census.converged);
}

TEST_CASE("rescaled family members reproduce the data and collapse to one") {
    InverseProblem pr;
    const auto set = shooting::multi_start(pr);
    REQUIRE_FALSE(set.solutions.empty());
    const auto& base = set.solutions.front();
    REQUIRE(base.periodic());
    const auto family = shooting::enumerate_rescales(pr, base, {-2, -1, 0, 1, 2});
    CHECK(family.size() == 5);
    for (const auto& m : family) {
        CHECK(shooting::verify_residual(pr, m.theta()) <= 1e-7);
        CHECK(rk4_residual(pr, m.theta()) <= 1e-6);
        // Same orbit: the Hamiltonian ratio beta2/beta1 and equilibrium agree.
        CHECK((*lv::equilibrium(m.params) - *lv::equilibrium(base.params)).norm() < 1e-6);
    }
    const auto collapsed = shooting::canonicalize(pr, family);
    REQUIRE(collapsed.size() == 1);
    CHECK(collapsed[0].canonical);
}

TEST_CASE("boundary intersections are found by multi-start") {
    InverseProblem pr;
    pr.p2 = {4.0, 3.375};
    auto set = shooting::multi_start(pr);
    bool hit = false;
    for (const auto& s : set.solutions)
        hit = hit || (std::abs(s.params.beta1) <= 1e-5 && std::abs(s.params.alpha2) <= 1e-5);
    CHECK(hit);

    pr.p2 = {8.0, 4.5};
    set = shooting::multi_start(pr);
    hit = false;
    for (const auto& s : set.solutions)
        hit = hit || (std::abs(s.params.alpha1) <= 1e-5 && std::abs(s.params.alpha2) <= 1e-5);
    CHECK(hit);
}

TEST_CASE("P2 equal to P0 is flagged as a continuum") {
    InverseProblem pr;
    pr.p2 = pr.p0;
    shooting::MultiStartOptions mo;
    mo.use_lattice = false;
    CHECK(shooting::multi_start(pr, mo).continuum);
}

TEST_CASE("problem validation") {
    InverseProblem pr;
    pr.p2 = {-1.0, 2.0};
    CHECK_THROWS_AS(pr.validate(), Error);
    pr.p2 = {2.0, 2.0};
    pr.times = {0.0, 2.0, 1.0};
    CHECK_THROWS_AS(pr.validate(), Error);
    CHECK(shooting::below_line({1, 1}, {2, 1.5}, {3, 1.0}));
    CHECK_FALSE(shooting::below_line({1, 1}, {2, 1.5}, {3, 3.0}));
}

TEST_CASE("rotation labels") {
    InverseProblem pr;
    const auto set = shooting::multi_start(pr);
    REQUIRE_FALSE(set.solutions.empty());
    const auto family = shooting::enumerate_rescales(pr, set.solutions.front(), {-4, -3, -2, -1, 0, 1, 2});
    std::vector<std::string> labels;
    for (const auto& m : family) labels.push_back(shooting::rotation_label(m));
    std::sort(labels.begin(), labels.end());
    CHECK(labels == std::vector<std::string>{"ccw0", "ccw1", "ccw2", "ccw3", "cw1", "cw2", "cw3"});
}
