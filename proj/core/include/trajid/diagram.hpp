#pragma once

// P2-diagrams: grid classification of the third data point by the number and
// sign structure of inverse solutions, plus the boundary curves between the
// regions.

#include "trajid/continuation.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trajid::diagram {

using lv::Point;
using shooting::LVSolution;

enum class CurveId { Alpha1, Alpha2, Beta1, Beta2, Separatrix, Periodic1, Periodic2, Fold1, Fold2 };

/// "C_alpha1", "C_alpha2", "C_beta1", "C_beta2", "C_s", "C_p1", "C_p2",
/// "C_f1", "C_f2".
std::string_view curve_name(CurveId id) noexcept;
std::optional<CurveId> parse_curve(std::string_view name);
const std::vector<CurveId>& all_curves();

struct Grid {
    double x_lo = 0.1, x_hi = 10.0, y_lo = 0.1, y_hi = 10.0;
    int nx = 80, ny = 80;

    [[nodiscard]] double dx() const { return (x_hi - x_lo) / nx; }
    [[nodiscard]] double dy() const { return (y_hi - y_lo) / ny; }
    [[nodiscard]] Point center(int i, int j) const { return {x_lo + (i + 0.5) * dx(), y_lo + (j + 0.5) * dy()}; }
};

struct DiagramSpec {
    Point p0{1.0, 1.0};
    Point p1{2.0, 1.5};
    lv::Family family = lv::Family::Plain;
    double family_param = 0.0;
    Grid grid;
    std::vector<CurveId> curves = all_curves();
    double blowup = 1e6;
    /// Full multi-start runs on every n-th cell in each direction; the other
    /// cells get cheap seeds and solutions propagated from neighbours.
    int anchor_stride = 10;
    bool refine = true;
    /// Trace the fold curves even when they are not requested, to seed the
    /// second sheet next to them.
    bool fold_seeding = true;
    /// Upper bound on the cells re-examined by the refinement pass.
    int refine_budget = 200;
    int workers = 1;
    /// Called with a short message as each build phase finishes.
    std::function<void(const std::string&)> progress;

    /// Throws ConfigError.
    void validate() const;
    [[nodiscard]] shooting::InverseProblem problem(const Point& p2) const;
};

/// Relative placement of P0 and P1: C1 (x0 < x1, y0 < y1), C2 (x1 < x0,
/// y1 > y0), C3 (x1 < x0, y1 < y0); anything else is Other.
enum class OrderingCase { C1, C2, C3, Other };

std::string_view to_string(OrderingCase c) noexcept;
OrderingCase ordering_case(const Point& p0, const Point& p1);

struct RegionLabel {
    /// R, G, M, C, B1..B4, a two-letter overlap name (RR, GG, RG, ...), NE,
    /// or the joined letters for combinations outside the usual table.
    std::string name;
    int count = 0;
    std::vector<lv::Signature> signatures; // distinct, sorted
    /// Name of the traced curve passing within 1e-6 of the point, if any.
    std::string boundary;
};

/// Label from a set of distinct (canonical) solutions.
RegionLabel label_for(const std::vector<LVSolution>& solutions);

/// Overlap names in table order, e.g. {"R","G"} -> "RG"; letters that are the
/// same give the doubled name.
std::string overlap_name(std::vector<std::string> letters);

struct CurvePolyline {
    std::vector<continuation::CurvePoint> points;
};

struct NamedCurve {
    CurveId id = CurveId::Beta1;
    std::vector<CurvePolyline> polylines;
    /// Terminal events or the reason a curve could not be traced.
    std::string note;
};

struct PointClassification {
    RegionLabel label;
    std::vector<LVSolution> solutions;
    shooting::Census census;
};

/// Full multi-start at P2; `curves` (optional) marks points on a curve.
PointClassification classify_point(const DiagramSpec& spec, const Point& p2,
                                   const std::vector<NamedCurve>* curves = nullptr);

/// Curves that need no grid: the beta lines, alpha curves and fold curves.
/// Frontier curves (C_s, C_p1, C_p2) in spec.curves trigger a full diagram
/// build, whose curves are returned.
std::vector<NamedCurve> trace_all_curves(const DiagramSpec& spec);

struct Cell {
    int i = 0, j = 0;
    Point center;
    RegionLabel label;
    std::vector<LVSolution> solutions;
    shooting::Census census;
    /// Labels of the 2x2 sub-cell centres when the cell was refined.
    std::vector<std::string> sub_labels;
    std::string failure;
};

struct DiagramArtifact {
    DiagramSpec spec;
    OrderingCase ordering = OrderingCase::C1;
    std::vector<Cell> cells; // row-major in j (y), then i (x)
    std::vector<NamedCurve> curves;
    shooting::Census census;
    /// 4-connected components of NE cells.
    int ne_components = 0;
    /// Distinct region names present, sorted.
    std::vector<std::string> regions;
    /// Adjacent cell pairs with different labels, and those without a traced
    /// curve between them (after refinement).
    int label_changes = 0;
    int unexplained_changes = 0;

    [[nodiscard]] const Cell& cell(int i, int j) const { return cells[static_cast<std::size_t>(j) * spec.grid.nx + i]; }
};

DiagramArtifact build_diagram(const DiagramSpec& spec);

struct SliceStart {
    Point p2;
    shooting::Vec4 theta;
};

/// Multi-start solutions on the slice {fixed = value} at the given values of
/// the other coordinate.
std::vector<SliceStart> probe_starts(const DiagramSpec& spec, continuation::Control fixed, double value,
                                     const std::vector<double>& coords);

/// Branches crossing the slice {fixed = value} over the grid range, each
/// continued in both directions. Without explicit starts, solutions from
/// multi-start at a few points along the slice are used.
std::vector<continuation::SolutionBranch> sheet_slice(const DiagramSpec& spec, continuation::Control fixed,
                                                      double value, std::vector<SliceStart> starts = {},
                                                      const continuation::StepPolicy& policy = {});

/// Folds on the slice branches, in branch order.
std::vector<continuation::FoldPoint> slice_folds(const std::vector<continuation::SolutionBranch>& branches);

} // namespace trajid::diagram
