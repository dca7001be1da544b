#include "doctest.h"

#include "trajid/diagram.hpp"
#include "trajid/error.hpp"

#include <set>

using namespace trajid;
namespace dg = trajid::diagram;

namespace {

shooting::LVSolution with_signature(const char* sig) {
    shooting::LVSolution s;
    s.signature = lv::Signature::parse(sig);
    return s;
}

dg::DiagramSpec small_spec() {
    dg::DiagramSpec spec;
    spec.grid.nx = 10;
    spec.grid.ny = 10;
    spec.anchor_stride = 5;
    spec.refine = false;
    spec.fold_seeding = false;
    spec.curves = {dg::CurveId::Beta1, dg::CurveId::Beta2, dg::CurveId::Alpha1, dg::CurveId::Alpha2};
    return spec;
}

} // namespace

TEST_CASE("labels from solution sets") {
    CHECK(dg::label_for({}).name == "NE");
    CHECK(dg::label_for({with_signature("+--+")}).name == "R");
    CHECK(dg::label_for({with_signature("+-+-"), with_signature("-+-+")}).name == "GG");
    const auto rg = dg::label_for({with_signature("-+-+"), with_signature("+--+")});
    CHECK(rg.name == "RG");
    CHECK(rg.count == 2);
    CHECK(dg::overlap_name({"G", "R"}) == "RG");
    CHECK(dg::overlap_name({"M", "M"}) == "MM");
}

TEST_CASE("curve names round-trip") {
    for (auto id : dg::all_curves()) CHECK(dg::parse_curve(dg::curve_name(id)) == id);
    CHECK_FALSE(dg::parse_curve("C_nope"));
    CHECK(dg::curve_name(dg::CurveId::Separatrix) == "C_s");
}

TEST_CASE("ordering cases of P0 and P1") {
    CHECK(dg::ordering_case({1, 1}, {2, 1.5}) == dg::OrderingCase::C1);
    CHECK(dg::ordering_case({2, 1}, {1, 1.5}) == dg::OrderingCase::C2);
    CHECK(dg::ordering_case({2, 2}, {1, 1}) == dg::OrderingCase::C3);
}

TEST_CASE("spec validation") {
    auto spec = small_spec();
    spec.grid.nx = 0;
    CHECK_THROWS_AS(spec.validate(), Error);
    spec = small_spec();
    spec.grid.x_hi = spec.grid.x_lo;
    CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("default data point is a predator-prey point") {
    const auto pc = dg::classify_point(small_spec(), {2.45, 4.0});
    CHECK(pc.label.name == "G");
}

TEST_CASE("small diagram is self-consistent") {
    const auto spec = small_spec();
    const auto art = dg::build_diagram(spec);
    REQUIRE(art.cells.size() == 100);
    CHECK_FALSE(art.regions.empty());

    std::set<std::string> seen;
    for (const auto& c : art.cells) {
        seen.insert(c.label.name);
        CHECK(c.label.name == dg::label_for(c.solutions).name);
        CHECK(c.label.count == static_cast<int>(c.solutions.size()));
        CHECK((c.center - spec.grid.center(c.i, c.j)).norm() == 0.0);
    }
    CHECK(std::vector<std::string>(seen.begin(), seen.end()) == art.regions);

    // Spot checks: stored solutions reproduce their cell's data point.
    for (std::size_t k = 0; k < art.cells.size(); k += 7) {
        const auto& c = art.cells[k];
        for (const auto& s : c.solutions)
            CHECK(shooting::verify_residual(spec.problem(c.center), s.theta()) < 1e-7);
    }

    // The beta lines are traced as x = 4 and y = 2.25.
    for (const auto& curve : art.curves) {
        if (curve.id != dg::CurveId::Beta1 && curve.id != dg::CurveId::Beta2) continue;
        REQUIRE_FALSE(curve.polylines.empty());
        for (const auto& pl : curve.polylines)
            for (const auto& p : pl.points) {
                if (curve.id == dg::CurveId::Beta1) CHECK(std::abs(p.p2.x() - 4.0) < 1e-9);
                if (curve.id == dg::CurveId::Beta2) CHECK(std::abs(p.p2.y() - 2.25) < 1e-9);
            }
    }
    CHECK(art.label_changes >= art.unexplained_changes);
}
