#include "doctest.h"

#include "trajid/error.hpp"
#include "trajid/io.hpp"

#include <sstream>

using namespace trajid;
namespace dg = trajid::diagram;

namespace {

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

dg::DiagramArtifact tiny_artifact() {
    dg::DiagramArtifact art;
    art.spec.grid.nx = 2;
    art.spec.grid.ny = 1;
    art.spec.curves = {dg::CurveId::Beta1};
    shooting::InverseProblem pr;
    const auto set = shooting::multi_start(pr);
    for (int i = 0; i < 2; ++i) {
        dg::Cell c;
        c.i = i;
        c.center = art.spec.grid.center(i, 0);
        if (i == 1) {
            c.solutions = set.solutions;
            c.sub_labels = {"G", "G", "NE", "G"};
        } else {
            c.failure = "no_convergence";
        }
        c.label = dg::label_for(c.solutions);
        art.cells.push_back(c);
    }
    dg::NamedCurve curve;
    curve.id = dg::CurveId::Beta1;
    curve.polylines.push_back({{{lv::Point(4.0, 1.0), lv::beta1_zero_solution(pr.p0, pr.p1, 1.0)},
                                {lv::Point(4.0, 2.0), lv::beta1_zero_solution(pr.p0, pr.p1, 2.0)}}});
    curve.note = "closed form";
    art.curves.push_back(curve);
    art.regions = {"G", "NE"};
    art.ne_components = 1;
    art.label_changes = 1;
    art.unexplained_changes = 1;
    return art;
}

} // namespace

TEST_CASE("numbers print with 17 significant digits") {
    CHECK(io::fmt(0.1) == "0.10000000000000001");
    CHECK(io::fmt(2.0) == "2");
    CHECK(std::stod(io::fmt(M_PI)) == M_PI);
}

TEST_CASE("point CSV parsing") {
    const auto d = io::parse_points_csv("t,x,y\n0,1,1\n1,2,3\n2,4,9\n");
    REQUIRE(d.points.size() == 3);
    CHECK(d.times == std::vector<double>{0, 1, 2});
    CHECK(d.points[2][1] == 9.0);
    CHECK(io::parse_points_csv("0,1,1\n1,2,3\n").points.size() == 2);
    CHECK_THROWS_AS(io::parse_points_csv("0,1,1\n1,2\n"), Error);
    CHECK_THROWS_AS(io::parse_points_csv("0,1,1\n1,2,x\n"), Error);
}

TEST_CASE("family names") {
    CHECK(io::parse_family("plain") == lv::Family::Plain);
    CHECK(io::parse_family("saturated") == lv::Family::Saturated);
    CHECK_THROWS_AS(io::parse_family("cubic"), Error);
}

TEST_CASE("CSV headers") {
    const auto art = tiny_artifact();
    std::ostringstream curves, sheet;
    io::write_curves_csv(curves, art.curves);
    CHECK(first_line(curves.str()) == "curve_id,x2,y2,alpha1,beta1,beta2,alpha2,branch_id");
    CHECK(curves.str().find('\r') == std::string::npos);
    io::write_sheet_csv(sheet, art);
    CHECK(first_line(sheet.str()) == "x2,y2,beta1,signature");

    continuation::SolutionBranch br;
    br.states.push_back({1.0, {4.5, 1.0}, lv::LVParams{1, -1, 1, -1}, 0.0, 0.0, continuation::Event::Fold});
    std::ostringstream b;
    io::write_branch_csv(b, br);
    CHECK(first_line(b.str()) == "control,x2,y2,alpha1,beta1,beta2,alpha2,event");
    CHECK(b.str().find("fold") != std::string::npos);
}

TEST_CASE("solution JSON round-trips and re-verifies") {
    shooting::InverseProblem pr;
    const auto set = shooting::multi_start(pr);
    REQUIRE_FALSE(set.solutions.empty());
    const std::string text = io::lv_solutions_json(pr, set);
    const auto loaded = io::parse_lv_solutions_json(text);
    REQUIRE(loaded.solutions.size() == set.solutions.size());
    CHECK((loaded.problem.p2 - pr.p2).norm() == 0.0);
    for (std::size_t k = 0; k < loaded.solutions.size(); ++k) {
        CHECK(loaded.solutions[k].theta() == set.solutions[k].theta());
        CHECK(loaded.solutions[k].signature == set.solutions[k].signature);
        CHECK(shooting::verify_residual(loaded.problem, loaded.solutions[k].theta()) <= 1e-8);
    }
    CHECK(io::lv_solutions_json(loaded.problem, {loaded.solutions, set.census, set.continuum}) == text);
}

TEST_CASE("diagram JSON round-trips") {
    const auto art = tiny_artifact();
    const std::string text = io::diagram_json(art);
    const auto back = io::parse_diagram_json(text);
    REQUIRE(back.cells.size() == 2);
    CHECK(back.cells[1].label.name == art.cells[1].label.name);
    CHECK(back.cells[1].sub_labels == art.cells[1].sub_labels);
    CHECK(back.cells[0].failure == "no_convergence");
    CHECK(back.regions == art.regions);
    CHECK(back.curves.size() == 1);
    CHECK(io::diagram_json(back) == text);
    CHECK_THROWS_AS(io::parse_diagram_json("{\"cells\": 3}"), Error);
}

TEST_CASE("branch JSON round-trips") {
    continuation::SolutionBranch br;
    br.control = continuation::Control::FamilyParam;
    br.terminal = continuation::Event::ControlLimit;
    br.states.push_back({0.0, {2.45, 4.0}, lv::LVParams{1, -0.4, 0.6, -0.5}, 0.0, 1e-12, continuation::Event::None});
    br.states.push_back({0.5, {2.45, 4.0}, lv::LVParams{1.1, -0.4, 0.6, -0.5}, 0.1, 1e-12,
                         continuation::Event::ControlLimit});
    continuation::FoldPoint f;
    f.control = 0.25;
    f.p2 = {2.45, 4.0};
    const std::string text = io::branches_json({br}, {f});
    const auto back = io::parse_branches_json(text);
    REQUIRE(back.branches.size() == 1);
    CHECK(back.branches[0].states.size() == 2);
    CHECK(back.branches[0].terminal == continuation::Event::ControlLimit);
    CHECK(back.branches[0].control == continuation::Control::FamilyParam);
    REQUIRE(back.folds.size() == 1);
    CHECK(back.folds[0].control == 0.25);
    CHECK(io::branches_json(back.branches, back.folds) == text);
}

TEST_CASE("SVG output") {
    const auto svg = io::diagram_svg(tiny_artifact());
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(io::branches_svg({}, {}, 1).find("<svg") != std::string::npos);
}

TEST_CASE("error record") {
    const auto e = io::error_json("linear-invert", ErrorCode::LinearlyDependentData, "collinear");
    CHECK(e.find("LinearlyDependentData") != std::string::npos);
    CHECK(e.find("linear-invert") != std::string::npos);
}
