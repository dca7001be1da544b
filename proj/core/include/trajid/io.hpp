#pragma once

// File formats: CSV tables, JSON documents and static SVG plots. All
// floating point output uses 17 significant digits and LF line endings so
// identical inputs give byte-identical files.

#include "trajid/diagram.hpp"
#include "trajid/linear_affine.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace trajid::io {

/// printf("%.17g").
std::string fmt(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Data points from CSV rows "t,x1,...,xn"; a non-numeric first row is
/// treated as a header. Throws IoError on malformed input.
inverse::TimedDataSet parse_points_csv(const std::string& text);

lv::Family parse_family(std::string_view name);

// --- CSV -------------------------------------------------------------------

/// Header curve_id,x2,y2,alpha1,beta1,beta2,alpha2,branch_id.
void write_curves_csv(std::ostream& os, const std::vector<diagram::NamedCurve>& curves);
/// Header control,x2,y2,alpha1,beta1,beta2,alpha2,event.
void write_branch_csv(std::ostream& os, const continuation::SolutionBranch& branch);
/// (x2, y2, beta1) triples of every cell solution, for surface plots.
void write_sheet_csv(std::ostream& os, const diagram::DiagramArtifact& art);

// --- JSON ------------------------------------------------------------------

std::string linear_report_json(const inverse::TimedDataSet& data, const inverse::LinearReport& report);
std::string affine_report_json(const inverse::TimedDataSet& data, const std::vector<inverse::AffineSolution>& sols);
std::string lv_solutions_json(const shooting::InverseProblem& problem, const shooting::SolutionSet& set);
std::string error_json(const std::string& command, ErrorCode code, const std::string& message);

struct LoadedSolutions {
    shooting::InverseProblem problem;
    std::vector<shooting::LVSolution> solutions;
};
LoadedSolutions parse_lv_solutions_json(const std::string& text);

std::string diagram_json(const diagram::DiagramArtifact& art);
/// Reads back what diagram_json wrote (spec, cell labels, solutions, curves,
/// census and summary counts).
diagram::DiagramArtifact parse_diagram_json(const std::string& text);

std::string branches_json(const std::vector<continuation::SolutionBranch>& branches,
                          const std::vector<continuation::FoldPoint>& folds);

struct LoadedBranches {
    std::vector<continuation::SolutionBranch> branches;
    std::vector<continuation::FoldPoint> folds;
};
/// Reads back what branches_json wrote (states, events and folds; the base
/// problem and tangents are not stored).
LoadedBranches parse_branches_json(const std::string& text);

// --- SVG -------------------------------------------------------------------

/// Regions as filled cells, curves as polylines, with a colour legend.
std::string diagram_svg(const diagram::DiagramArtifact& art);
/// Parameter `component` (0..3 for alpha1, beta1, beta2, alpha2) against the
/// control along each branch, folds marked.
std::string branches_svg(const std::vector<continuation::SolutionBranch>& branches,
                         const std::vector<continuation::FoldPoint>& folds, int component);

} // namespace trajid::io
