#include "trajid/diagram.hpp"

#include "trajid/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <thread>

namespace trajid::diagram {

using continuation::Control;
using continuation::CurvePoint;
using shooting::InverseProblem;
using shooting::Vec4;

namespace {

constexpr double kOnCurveTol = 1e-6;
constexpr double kFrontierTol = 1e-4;
constexpr std::size_t kMaxSolutionsPerCell = 12;

const std::vector<std::string>& letter_order() {
    static const std::vector<std::string> order{"R", "G", "M", "C", "B1", "B2", "B3", "B4"};
    return order;
}

int letter_rank(const std::string& l) {
    const auto& o = letter_order();
    const auto it = std::find(o.begin(), o.end(), l);
    return it == o.end() ? static_cast<int>(o.size()) : static_cast<int>(it - o.begin());
}

std::string letter_of(const lv::Signature& s) {
    const std::string_view l = lv::region_letter(s);
    return l.empty() ? "[" + s.str() + "]" : std::string(l);
}

template <class F>
void parallel_for(int n, int workers, F&& f) {
    if (workers <= 1 || n < 2) {
        for (int k = 0; k < n; ++k) f(k);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            for (int k = next++; k < n; k = next++) f(k);
        });
    }
    for (auto& t : pool) t.join();
}

double seg_point_distance(const Point& a, const Point& b, const Point& p) {
    const Point d = b - a;
    const double len2 = d.squaredNorm();
    const double s = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    return (a + s * d - p).norm();
}

double cross2(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d) {
    const double d1 = cross2(b - a, c - a);
    const double d2 = cross2(b - a, d - a);
    const double d3 = cross2(d - c, a - c);
    const double d4 = cross2(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

shooting::ShootOptions cell_shoot_options(const DiagramSpec& spec) {
    shooting::ShootOptions o;
    o.max_iterations = 40;
    o.max_halvings = 12;
    o.stall_window = 6;
    o.max_step_ratio = 2.0;
    o.max_integration_steps = 50000;
    o.blowup = spec.blowup;
    return o;
}

continuation::Box box_of(const Grid& g) { return {g.x_lo, g.x_hi, g.y_lo, g.y_hi}; }

continuation::StepPolicy curve_policy(const DiagramSpec& spec) {
    continuation::StepPolicy p;
    p.blowup = spec.blowup;
    p.max_states = 400;
    return p;
}

double relative_distance(const Vec4& a, const Vec4& b) { return (a - b).norm() / std::max(1.0, std::max(a.norm(), b.norm())); }

std::string on_curve(const Point& p, const std::vector<NamedCurve>* curves) {
    if (!curves) return {};
    for (const NamedCurve& c : *curves) {
        for (const CurvePolyline& pl : c.polylines) {
            for (std::size_t k = 0; k + 1 < pl.points.size(); ++k) {
                if (seg_point_distance(pl.points[k].p2, pl.points[k + 1].p2, p) <= kOnCurveTol) {
                    return std::string(curve_name(c.id));
                }
            }
            if (pl.points.size() == 1 && (pl.points[0].p2 - p).norm() <= kOnCurveTol) return std::string(curve_name(c.id));
        }
    }
    return {};
}

// Orders a point cloud along a curve by greedy nearest-neighbour chaining,
// splitting where consecutive points are more than `gap` apart.
std::vector<CurvePolyline> chain(std::vector<CurvePoint> pts, double gap) {
    std::vector<CurvePolyline> out;
    std::sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) {
        return a.p2.x() != b.p2.x() ? a.p2.x() < b.p2.x() : a.p2.y() < b.p2.y();
    });
    std::vector<bool> used(pts.size(), false);
    for (std::size_t s = 0; s < pts.size(); ++s) {
        if (used[s]) continue;
        CurvePolyline pl;
        std::size_t cur = s;
        used[cur] = true;
        pl.points.push_back(pts[cur]);
        while (true) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = pts.size();
            for (std::size_t k = 0; k < pts.size(); ++k) {
                if (used[k]) continue;
                const double d = (pts[k].p2 - pts[cur].p2).norm();
                if (d < best) {
                    best = d;
                    arg = k;
                }
            }
            if (arg == pts.size() || best > gap) break;
            used[arg] = true;
            cur = arg;
            pl.points.push_back(pts[cur]);
        }
        out.push_back(std::move(pl));
    }
    return out;
}

std::vector<CurvePolyline> to_polylines(const continuation::Curve& c) {
    std::vector<CurvePolyline> out;
    for (const auto& b : c.branches) {
        if (!b.empty()) out.push_back({b});
    }
    return out;
}

std::string curve_note(const continuation::Curve& c) {
    return "ends: " + std::string(continuation::to_string(c.terminal_backward)) + ", " +
           std::string(continuation::to_string(c.terminal_forward));
}

bool near_polylines(const std::vector<CurvePolyline>& pls, const Point& p, double tol) {
    for (const auto& pl : pls) {
        for (std::size_t k = 0; k + 1 < pl.points.size(); ++k) {
            if (seg_point_distance(pl.points[k].p2, pl.points[k + 1].p2, p) <= tol) return true;
        }
    }
    return false;
}

NamedCurve beta_line(const DiagramSpec& spec, CurveId id) {
    NamedCurve c;
    c.id = id;
    const Grid& g = spec.grid;
    CurvePolyline pl;
    constexpr int kSamples = 64;
    if (spec.family != lv::Family::Plain && spec.family_param != 0.0) {
        c.note = "closed form needs the conservative field";
        return c;
    }
    if (id == CurveId::Beta1) {
        const double x = lv::beta1_zero_line(spec.p0, spec.p1);
        if (x < g.x_lo || x > g.x_hi) {
            c.note = "outside window";
            return c;
        }
        for (int k = 0; k <= kSamples; ++k) {
            const double y = g.y_lo + (g.y_hi - g.y_lo) * k / kSamples;
            pl.points.push_back({Point(x, y), lv::beta1_zero_solution(spec.p0, spec.p1, y)});
        }
    } else {
        const double y = lv::beta2_zero_line(spec.p0, spec.p1);
        if (y < g.y_lo || y > g.y_hi) {
            c.note = "outside window";
            return c;
        }
        for (int k = 0; k <= kSamples; ++k) {
            const double x = g.x_lo + (g.x_hi - g.x_lo) * k / kSamples;
            pl.points.push_back({Point(x, y), lv::beta2_zero_solution(spec.p0, spec.p1, x)});
        }
    }
    c.polylines.push_back(std::move(pl));
    return c;
}

// Alpha curves start from the closed-form solutions (plain family only); the
// scan over the equilibrium coordinate catches separate components.
NamedCurve alpha_curve(const DiagramSpec& spec, CurveId id) {
    NamedCurve c;
    c.id = id;
    if (spec.family != lv::Family::Plain && spec.family_param != 0.0) {
        c.note = "closed-form start needs the conservative field";
        return c;
    }
    const bool first = id == CurveId::Alpha1;
    const auto which = first ? continuation::ZeroParameter::Alpha1 : continuation::ZeroParameter::Alpha2;
    const continuation::Box box = box_of(spec.grid);
    const double lo = 0.02 * (first ? std::min(spec.p0.x(), spec.p1.x()) : std::min(spec.p0.y(), spec.p1.y()));
    const double hi = 50.0 * (first ? std::max(spec.p0.x(), spec.p1.x()) : std::max(spec.p0.y(), spec.p1.y()));
    constexpr int kScan = 40;
    const double gap = 2.0 * std::max(spec.grid.dx(), spec.grid.dy());
    std::vector<std::string> notes;
    for (int k = 0; k <= kScan && c.polylines.size() < 4; ++k) {
        const double star = lo * std::pow(hi / lo, static_cast<double>(k) / kScan);
        lv::ZeroCurvePoint z;
        try {
            z = first ? lv::alpha1_zero_solution(spec.p0, spec.p1, star) : lv::alpha2_zero_solution(spec.p0, spec.p1, star);
        } catch (const Error&) {
            continue;
        }
        if (!box.contains(z.p2) || near_polylines(c.polylines, z.p2, gap)) continue;
        InverseProblem pr = spec.problem(z.p2);
        try {
            const continuation::Curve traced =
                continuation::trace_zero_curve(pr, z.params.theta(), which, box, std::string(curve_name(id)), curve_policy(spec));
            for (auto& pl : to_polylines(traced)) c.polylines.push_back(std::move(pl));
            notes.push_back(curve_note(traced));
        } catch (const Error& e) {
            notes.push_back(e.what());
        }
    }
    if (c.polylines.empty() && notes.empty()) notes.emplace_back("no start point inside the window");
    for (std::size_t k = 0; k < notes.size(); ++k) c.note += (k ? "; " : "") + notes[k];
    return c;
}

struct FoldSlice {
    Control fixed;
    double value;
};

// Slice through the fold: a little beyond the beta line, across the other
// coordinate.
FoldSlice fold_slice(const DiagramSpec& spec, CurveId id) {
    const Grid& g = spec.grid;
    if (id == CurveId::Fold1) {
        double x = 1.125 * lv::beta1_zero_line(spec.p0, spec.p1);
        if (x <= g.x_lo || x >= g.x_hi) x = 0.5 * (g.x_lo + g.x_hi);
        return {Control::X2, x};
    }
    double y = 1.125 * lv::beta2_zero_line(spec.p0, spec.p1);
    if (y <= g.y_lo || y >= g.y_hi) y = 0.5 * (g.y_lo + g.y_hi);
    return {Control::Y2, y};
}

NamedCurve fold_curve(const DiagramSpec& spec, CurveId id, std::vector<SliceStart> starts) {
    NamedCurve c;
    c.id = id;
    const FoldSlice fs = fold_slice(spec, id);
    std::vector<continuation::SolutionBranch> branches;
    try {
        branches = sheet_slice(spec, fs.fixed, fs.value, std::move(starts));
    } catch (const Error& e) {
        c.note = e.what();
        return c;
    }
    const auto folds = slice_folds(branches);
    if (folds.empty()) {
        c.note = "no fold on the slice";
        return c;
    }
    const continuation::Box box = box_of(spec.grid);
    const double gap = 1e-3 * std::max(spec.grid.x_hi - spec.grid.x_lo, spec.grid.y_hi - spec.grid.y_lo);
    std::vector<std::string> notes;
    for (const auto& f : folds) {
        if (!box.contains(f.p2) || near_polylines(c.polylines, f.p2, gap)) continue;
        if (c.polylines.size() >= 4) break;
        try {
            const continuation::Curve traced =
                continuation::continue_fold(spec.problem(f.p2), f, box, std::string(curve_name(id)), curve_policy(spec));
            for (auto& pl : to_polylines(traced)) c.polylines.push_back(std::move(pl));
            notes.push_back(curve_note(traced));
        } catch (const Error& e) {
            notes.push_back(e.what());
        }
    }
    for (std::size_t k = 0; k < notes.size(); ++k) c.note += (k ? "; " : "") + notes[k];
    return c;
}

bool is_frontier_curve(CurveId id) {
    return id == CurveId::Separatrix || id == CurveId::Periodic1 || id == CurveId::Periodic2;
}

bool wants(const DiagramSpec& spec, CurveId id) {
    return std::find(spec.curves.begin(), spec.curves.end(), id) != spec.curves.end();
}

// ---------------------------------------------------------------------------
// Grid builder state.

class Builder {
public:
    explicit Builder(const DiagramSpec& spec) : spec_(spec), grid_(spec.grid), opts_(cell_shoot_options(spec)) {
        cells_.resize(static_cast<std::size_t>(grid_.nx) * grid_.ny);
        for (int j = 0; j < grid_.ny; ++j) {
            for (int i = 0; i < grid_.nx; ++i) {
                Cell& c = cells_[index(i, j)];
                c.i = i;
                c.j = j;
                c.center = grid_.center(i, j);
            }
        }
    }

    DiagramArtifact run() {
        initial_pass();
        note("initial pass");
        flood();
        note("flood");

        std::vector<NamedCurve> curves;
        for (CurveId id : {CurveId::Beta1, CurveId::Beta2}) {
            if (wants(spec_, id)) curves.push_back(beta_line(spec_, id));
        }
        for (CurveId id : {CurveId::Alpha1, CurveId::Alpha2}) {
            if (wants(spec_, id)) curves.push_back(alpha_curve(spec_, id));
        }
        note("beta and alpha curves");
        // Fold curves seed the second sheet of each fold, which propagation
        // from neighbours cannot reach.
        for (CurveId id : {CurveId::Fold1, CurveId::Fold2}) {
            if (!spec_.fold_seeding && !wants(spec_, id)) continue;
            NamedCurve fc = fold_curve(spec_, id, slice_starts(fold_slice(spec_, id)));
            seed_from_fold(fc);
            if (wants(spec_, id)) curves.push_back(std::move(fc));
            note(std::string(curve_name(id)));
        }
        flood();
        note("flood");

        const bool frontier = std::any_of(spec_.curves.begin(), spec_.curves.end(), is_frontier_curve);
        if (frontier) {
            for (NamedCurve& c : frontier_curves()) {
                if (wants(spec_, c.id)) curves.push_back(std::move(c));
            }
            note("frontier curves");
        }
        std::sort(curves.begin(), curves.end(), [](const NamedCurve& a, const NamedCurve& b) { return a.id < b.id; });
        curves_ = std::move(curves);
        build_segment_index();

        relabel();
        if (spec_.refine) refine();
        relabel();
        note("refinement");

        DiagramArtifact art;
        art.spec = spec_;
        art.ordering = ordering_case(spec_.p0, spec_.p1);
        art.curves = curves_;
        std::set<std::string> names;
        for (const Cell& c : cells_) {
            names.insert(c.label.name);
            art.census.seeds += c.census.seeds;
            art.census.converged += c.census.converged;
            art.census.no_convergence += c.census.no_convergence;
            art.census.blowup += c.census.blowup;
            art.census.integration_failure += c.census.integration_failure;
            art.census.duplicates += c.census.duplicates;
        }
        art.regions.assign(names.begin(), names.end());
        art.ne_components = ne_components();
        const auto [changes, unexplained] = count_changes();
        art.label_changes = changes;
        art.unexplained_changes = unexplained;
        art.cells = std::move(cells_);
        return art;
    }

private:
    void note(const std::string& what) const {
        if (!spec_.progress) return;
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        int solutions = 0;
        for (const Cell& c : cells_) solutions += static_cast<int>(c.solutions.size());
        char buf[96];
        std::snprintf(buf, sizeof buf, " done at %.1f s, %d solutions", s, solutions);
        spec_.progress(what + buf);
    }

    [[nodiscard]] std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * grid_.nx + i; }

    // Cheap seeds everywhere, full multi-start on the anchor lattice.
    void initial_pass() {
        const int stride = std::max(1, spec_.anchor_stride);
        const int off = stride / 2;
        parallel_for(static_cast<int>(cells_.size()), spec_.workers, [&](int k) {
            Cell& c = cells_[k];
            const bool anchor = c.i % stride == off % grid_.nx && c.j % stride == off % grid_.ny;
            shooting::MultiStartOptions ms;
            ms.use_lattice = anchor;
            ms.shoot = opts_;
            ms.lattice_shoot.blowup = spec_.blowup;
            try {
                shooting::SolutionSet set = shooting::multi_start(spec_.problem(c.center), ms);
                c.census = set.census;
                c.solutions = std::move(set.solutions);
                cap(c);
            } catch (const Error& e) {
                c.failure = e.what();
            }
        });
        for (std::size_t k = 0; k < cells_.size(); ++k) {
            for (const LVSolution& s : cells_[k].solutions) push_neighbours(k, s.theta());
        }
    }

    void cap(Cell& c) const {
        if (c.solutions.size() > kMaxSolutionsPerCell) c.solutions.resize(kMaxSolutionsPerCell);
    }

    void push_neighbours(std::size_t k, const Vec4& theta) {
        const int i = cells_[k].i, j = cells_[k].j;
        if (i > 0) queue_.emplace_back(index(i - 1, j), theta);
        if (i + 1 < grid_.nx) queue_.emplace_back(index(i + 1, j), theta);
        if (j > 0) queue_.emplace_back(index(i, j - 1), theta);
        if (j + 1 < grid_.ny) queue_.emplace_back(index(i, j + 1), theta);
    }

    /// Newton from `theta` at cell k; returns the new canonical solution if it
    /// adds one. Seeds close to an existing solution are skipped unless forced.
    std::optional<LVSolution> try_seed(std::size_t k, const Vec4& theta, bool force = false) {
        Cell& c = cells_[k];
        if (c.solutions.size() >= kMaxSolutionsPerCell) return std::nullopt;
        if (!force) {
            for (const LVSolution& s : c.solutions) {
                if (relative_distance(s.theta(), theta) <= 0.05) return std::nullopt;
            }
        }
        const InverseProblem pr = spec_.problem(c.center);
        ++c.census.seeds;
        shooting::ShootOutcome out;
        try {
            out = shooting::shoot(pr, theta, opts_);
        } catch (const Error&) {
            ++c.census.integration_failure;
            return std::nullopt;
        }
        if (!out.solution) {
            if (out.failure == ErrorCode::IntegrationBlowup) {
                ++c.census.blowup;
            } else {
                ++c.census.no_convergence;
            }
            return std::nullopt;
        }
        ++c.census.converged;
        std::vector<LVSolution> merged = c.solutions;
        merged.push_back(*out.solution);
        merged = shooting::canonicalize(pr, std::move(merged));
        if (merged.size() <= c.solutions.size()) {
            ++c.census.duplicates;
            return std::nullopt;
        }
        std::optional<LVSolution> added;
        for (const LVSolution& m : merged) {
            const bool old = std::any_of(c.solutions.begin(), c.solutions.end(),
                                         [&](const LVSolution& s) { return relative_distance(s.theta(), m.theta()) <= 1e-5; });
            if (!old) added = m;
        }
        c.solutions = std::move(merged);
        cap(c);
        return added;
    }

    void flood() {
        while (!queue_.empty()) {
            const auto [k, theta] = queue_.front();
            queue_.pop_front();
            if (const auto added = try_seed(k, theta)) push_neighbours(k, added->theta());
        }
    }

    // Solutions on the slice line, shot from the nearest grid column/row.
    std::vector<SliceStart> slice_starts(const FoldSlice& fs) {
        std::vector<SliceStart> starts;
        const bool fixed_x = fs.fixed == Control::X2;
        const double rel = fixed_x ? (fs.value - grid_.x_lo) / grid_.dx() - 0.5 : (fs.value - grid_.y_lo) / grid_.dy() - 0.5;
        const int line = std::clamp(static_cast<int>(std::lround(rel)), 0, (fixed_x ? grid_.nx : grid_.ny) - 1);
        const int n = fixed_x ? grid_.ny : grid_.nx;
        for (int m = 0; m < n; ++m) {
            const Cell& c = fixed_x ? cells_[index(line, m)] : cells_[index(m, line)];
            const Point p = fixed_x ? Point(fs.value, c.center.y()) : Point(c.center.x(), fs.value);
            for (const LVSolution& s : c.solutions) {
                try {
                    const auto out = shooting::shoot(spec_.problem(p), s.theta(), opts_);
                    if (out.solution) starts.push_back({p, out.solution->theta()});
                } catch (const Error&) {
                }
            }
        }
        return starts;
    }

    // Seeds on both sides of each fold point, displaced along the null vector
    // of the parameter Jacobian, for the cells around it.
    void seed_from_fold(const NamedCurve& fc) {
        const double h = std::max(grid_.dx(), grid_.dy());
        for (const CurvePolyline& pl : fc.polylines) {
            Point last(std::numeric_limits<double>::infinity(), 0.0);
            for (const CurvePoint& fp : pl.points) {
                if ((fp.p2 - last).norm() < 1.5 * h) continue;
                last = fp.p2;
                const Vec4 th = fp.params.theta();
                Vec4 v;
                try {
                    const auto ev = shooting::evaluate_residual(spec_.problem(fp.p2), th, 1e-11);
                    const Eigen::JacobiSVD<shooting::Mat4> svd(ev.jac_theta, Eigen::ComputeFullV);
                    v = svd.matrixV().col(3);
                } catch (const Error&) {
                    continue;
                }
                const double amp = std::max(1.0, th.norm());
                const int ci = static_cast<int>(std::floor((fp.p2.x() - grid_.x_lo) / grid_.dx()));
                const int cj = static_cast<int>(std::floor((fp.p2.y() - grid_.y_lo) / grid_.dy()));
                for (int dj = -2; dj <= 2; ++dj) {
                    for (int di = -2; di <= 2; ++di) {
                        const int i = ci + di, j = cj + dj;
                        if (i < 0 || j < 0 || i >= grid_.nx || j >= grid_.ny) continue;
                        const std::size_t k = index(i, j);
                        if ((cells_[k].center - fp.p2).norm() > 2.0 * h) continue;
                        for (double sgn : {1.0, -1.0}) {
                            for (double d : {0.02, 0.1}) {
                                if (const auto added = try_seed(k, th + sgn * d * amp * v)) {
                                    push_neighbours(k, added->theta());
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    // Blow-up frontiers: along each row and column, sheets of type R or G
    // that cannot be followed into the next cell are bisected in data space;
    // points where the parameters have grown markedly are frontier points.
    std::vector<NamedCurve> frontier_curves() {
        std::vector<CurvePoint> sep, per1, per2;
        const double len = std::max(grid_.dx(), grid_.dy());
        auto probe = [&](std::size_t a, std::size_t b) {
            for (const LVSolution& s : cells_[a].solutions) {
                const std::string letter = letter_of(s.signature);
                if (letter != "R" && letter != "G") continue;
                const Point pa = cells_[a].center, pb = cells_[b].center;
                Vec4 good = s.theta();
                double lo = 0.0, hi = 1.0;
                bool failed_once = false;
                while ((hi - lo) * (pb - pa).norm() > kFrontierTol) {
                    const double mid = failed_once ? 0.5 * (lo + hi) : 1.0;
                    const Point p = pa + mid * (pb - pa);
                    std::optional<LVSolution> sol;
                    try {
                        sol = shooting::shoot(spec_.problem(p), good, opts_).solution;
                    } catch (const Error&) {
                    }
                    if (sol) {
                        if (!failed_once) break; // followed into b: no frontier
                        lo = mid;
                        good = sol->theta();
                    } else {
                        failed_once = true;
                        hi = mid;
                    }
                }
                if (!failed_once) continue;
                const double grow = good.cwiseAbs().maxCoeff() / std::max(1.0, s.theta().cwiseAbs().maxCoeff());
                if (grow < 3.0) continue; // finite parameters: a fold, not a divergence
                const Point p = pa + lo * (pb - pa);
                CurvePoint cp{p, spec_.problem(p).params(good)};
                if (letter == "R") {
                    sep.push_back(cp);
                } else if (std::abs(p.y() - spec_.p0.y()) / spec_.p0.y() <= std::abs(p.x() - spec_.p0.x()) / spec_.p0.x()) {
                    per1.push_back(cp);
                } else {
                    per2.push_back(cp);
                }
            }
        };
        for (int j = 0; j < grid_.ny; ++j) {
            for (int i = 0; i < grid_.nx; ++i) {
                const std::size_t k = index(i, j);
                if (i + 1 < grid_.nx) {
                    probe(k, index(i + 1, j));
                    probe(index(i + 1, j), k);
                }
                if (j + 1 < grid_.ny) {
                    probe(k, index(i, j + 1));
                    probe(index(i, j + 1), k);
                }
            }
        }
        std::vector<NamedCurve> out;
        const double gap = 3.0 * len;
        for (auto [id, pts] : {std::pair{CurveId::Separatrix, &sep}, std::pair{CurveId::Periodic1, &per1},
                               std::pair{CurveId::Periodic2, &per2}}) {
            NamedCurve c;
            c.id = id;
            c.polylines = chain(*pts, gap);
            c.note = std::to_string(pts->size()) + " frontier points";
            out.push_back(std::move(c));
        }
        return out;
    }

    void build_segment_index() {
        seg_index_.assign(cells_.size(), {});
        segments_.clear();
        for (const NamedCurve& c : curves_) {
            for (const CurvePolyline& pl : c.polylines) {
                for (std::size_t k = 0; k + 1 < pl.points.size(); ++k) {
                    const Point a = pl.points[k].p2, b = pl.points[k + 1].p2;
                    const std::size_t id = segments_.size();
                    segments_.emplace_back(a, b);
                    const auto clampi = [](int v, int n) { return std::clamp(v, 0, n - 1); };
                    const int i0 = clampi(static_cast<int>(std::floor((std::min(a.x(), b.x()) - grid_.x_lo) / grid_.dx())) - 1, grid_.nx);
                    const int i1 = clampi(static_cast<int>(std::floor((std::max(a.x(), b.x()) - grid_.x_lo) / grid_.dx())) + 1, grid_.nx);
                    const int j0 = clampi(static_cast<int>(std::floor((std::min(a.y(), b.y()) - grid_.y_lo) / grid_.dy())) - 1, grid_.ny);
                    const int j1 = clampi(static_cast<int>(std::floor((std::max(a.y(), b.y()) - grid_.y_lo) / grid_.dy())) + 1, grid_.ny);
                    for (int j = j0; j <= j1; ++j) {
                        for (int i = i0; i <= i1; ++i) seg_index_[index(i, j)].push_back(id);
                    }
                }
            }
        }
    }

    bool curve_between(std::size_t a, std::size_t b) const {
        const Point pa = cells_[a].center, pb = cells_[b].center;
        for (std::size_t k : {a, b}) {
            for (std::size_t id : seg_index_[k]) {
                const auto& [c, d] = segments_[id];
                if (segments_intersect(pa, pb, c, d)) return true;
                if (seg_point_distance(c, d, pa) <= kOnCurveTol || seg_point_distance(c, d, pb) <= kOnCurveTol) return true;
            }
        }
        return false;
    }

    void relabel() {
        for (Cell& c : cells_) {
            c.label = label_for(c.solutions);
            c.label.boundary = on_curve(c.center, &curves_);
        }
    }

    template <class F>
    void for_each_pair(F&& f) const {
        for (int j = 0; j < grid_.ny; ++j) {
            for (int i = 0; i < grid_.nx; ++i) {
                if (i + 1 < grid_.nx) f(index(i, j), index(i + 1, j));
                if (j + 1 < grid_.ny) f(index(i, j), index(i, j + 1));
            }
        }
    }

    std::pair<int, int> count_changes() const {
        int changes = 0, unexplained = 0;
        for_each_pair([&](std::size_t a, std::size_t b) {
            if (cells_[a].label.name == cells_[b].label.name) return;
            ++changes;
            if (!curve_between(a, b)) ++unexplained;
        });
        return {changes, unexplained};
    }

    // One refinement level: cells on unexplained label changes are re-seeded
    // from all eight neighbours and sampled at their 2x2 sub-centres.
    void refine() {
        std::set<std::size_t> flagged;
        for_each_pair([&](std::size_t a, std::size_t b) {
            if (cells_[a].label.name != cells_[b].label.name && !curve_between(a, b)) {
                flagged.insert(a);
                flagged.insert(b);
            }
        });
        int budget = spec_.refine_budget;
        for (std::size_t k : flagged) {
            if (budget-- <= 0) break;
            Cell& c = cells_[k];
            std::vector<Vec4> seeds;
            for (int dj = -1; dj <= 1; ++dj) {
                for (int di = -1; di <= 1; ++di) {
                    const int i = c.i + di, j = c.j + dj;
                    if ((di == 0 && dj == 0) || i < 0 || j < 0 || i >= grid_.nx || j >= grid_.ny) continue;
                    for (const LVSolution& s : cells_[index(i, j)].solutions) seeds.push_back(s.theta());
                }
            }
            for (const Vec4& s : seeds) {
                if (const auto added = try_seed(k, s)) push_neighbours(k, added->theta());
            }
            for (const LVSolution& s : c.solutions) seeds.push_back(s.theta());
            c.sub_labels.clear();
            for (int sj = 0; sj < 2; ++sj) {
                for (int si = 0; si < 2; ++si) {
                    const Point p(c.center.x() + (si - 0.5) * 0.5 * grid_.dx(), c.center.y() + (sj - 0.5) * 0.5 * grid_.dy());
                    const InverseProblem pr = spec_.problem(p);
                    std::vector<LVSolution> sols;
                    for (const Vec4& s : seeds) {
                        try {
                            if (auto o = shooting::shoot(pr, s, opts_); o.solution) sols.push_back(*o.solution);
                        } catch (const Error&) {
                        }
                    }
                    c.sub_labels.push_back(label_for(shooting::canonicalize(pr, std::move(sols))).name);
                }
            }
        }
        flood();
    }

    int ne_components() const {
        std::vector<int> comp(cells_.size(), -1);
        int count = 0;
        for (std::size_t s = 0; s < cells_.size(); ++s) {
            if (comp[s] >= 0 || cells_[s].label.name != "NE") continue;
            std::deque<std::size_t> q{s};
            comp[s] = count;
            while (!q.empty()) {
                const std::size_t k = q.front();
                q.pop_front();
                const int i = cells_[k].i, j = cells_[k].j;
                const std::pair<int, int> nb[] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
                for (auto [a, b] : nb) {
                    if (a < 0 || b < 0 || a >= grid_.nx || b >= grid_.ny) continue;
                    const std::size_t n = index(a, b);
                    if (comp[n] < 0 && cells_[n].label.name == "NE") {
                        comp[n] = count;
                        q.push_back(n);
                    }
                }
            }
            ++count;
        }
        return count;
    }

    const DiagramSpec& spec_;
    const Grid& grid_;
    shooting::ShootOptions opts_;
    std::vector<Cell> cells_;
    std::deque<std::pair<std::size_t, Vec4>> queue_;
    std::vector<NamedCurve> curves_;
    std::vector<std::pair<Point, Point>> segments_;
    std::vector<std::vector<std::size_t>> seg_index_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Interpolated parameters of a branch at control value c, if some segment of
// the branch brackets c.
std::vector<Vec4> branch_at(const continuation::SolutionBranch& b, double c) {
    std::vector<Vec4> out;
    for (std::size_t k = 0; k + 1 < b.states.size(); ++k) {
        const double c0 = b.states[k].control, c1 = b.states[k + 1].control;
        if ((c - c0) * (c - c1) > 0.0 || c0 == c1) continue;
        const double s = (c - c0) / (c1 - c0);
        out.push_back((1.0 - s) * b.states[k].params.theta() + s * b.states[k + 1].params.theta());
    }
    if (b.states.size() == 1 && b.states[0].control == c) out.push_back(b.states[0].params.theta());
    return out;
}

} // namespace

std::string_view curve_name(CurveId id) noexcept {
    switch (id) {
    case CurveId::Alpha1: return "C_alpha1";
    case CurveId::Alpha2: return "C_alpha2";
    case CurveId::Beta1: return "C_beta1";
    case CurveId::Beta2: return "C_beta2";
    case CurveId::Separatrix: return "C_s";
    case CurveId::Periodic1: return "C_p1";
    case CurveId::Periodic2: return "C_p2";
    case CurveId::Fold1: return "C_f1";
    case CurveId::Fold2: return "C_f2";
    }
    return "?";
}

std::optional<CurveId> parse_curve(std::string_view name) {
    for (CurveId id : all_curves()) {
        if (curve_name(id) == name) return id;
    }
    return std::nullopt;
}

const std::vector<CurveId>& all_curves() {
    static const std::vector<CurveId> ids{CurveId::Alpha1,     CurveId::Alpha2,    CurveId::Beta1,
                                          CurveId::Beta2,      CurveId::Separatrix, CurveId::Periodic1,
                                          CurveId::Periodic2, CurveId::Fold1,     CurveId::Fold2};
    return ids;
}

void DiagramSpec::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
    if (!(p0.x() > 0 && p0.y() > 0 && p1.x() > 0 && p1.y() > 0)) fail("P0 and P1 must lie in the open first quadrant");
    if (p0 == p1) fail("P0 and P1 coincide");
    if (!(grid.x_lo > 0 && grid.y_lo > 0)) fail("grid must lie in the open first quadrant");
    if (!(grid.x_hi > grid.x_lo && grid.y_hi > grid.y_lo)) fail("empty grid window");
    if (grid.nx < 1 || grid.ny < 1 || grid.nx > 4000 || grid.ny > 4000) fail("grid resolution must be in [1, 4000]");
    if (!(blowup > 0)) fail("blow-up threshold must be positive");
    if (anchor_stride < 1) fail("anchor stride must be >= 1");
    if (workers < 1) fail("worker count must be >= 1");
    if (refine_budget < 0) fail("refinement budget must be >= 0");
    if (family == lv::Family::Saturated && !(family_param >= 0)) fail("saturation parameter must be >= 0");
    if (!std::isfinite(family_param)) fail("family parameter must be finite");
}

InverseProblem DiagramSpec::problem(const Point& p2) const {
    InverseProblem pr;
    pr.p0 = p0;
    pr.p1 = p1;
    pr.p2 = p2;
    pr.family = family;
    pr.family_param = family_param;
    return pr;
}

std::string_view to_string(OrderingCase c) noexcept {
    switch (c) {
    case OrderingCase::C1: return "C1";
    case OrderingCase::C2: return "C2";
    case OrderingCase::C3: return "C3";
    case OrderingCase::Other: return "other";
    }
    return "?";
}

OrderingCase ordering_case(const Point& p0, const Point& p1) {
    if (p0.x() < p1.x() && p0.y() < p1.y()) return OrderingCase::C1;
    if (p1.x() < p0.x() && p1.y() > p0.y()) return OrderingCase::C2;
    if (p1.x() < p0.x() && p1.y() < p0.y()) return OrderingCase::C3;
    return OrderingCase::Other;
}

std::string overlap_name(std::vector<std::string> letters) {
    std::stable_sort(letters.begin(), letters.end(),
                     [](const std::string& a, const std::string& b) { return letter_rank(a) < letter_rank(b); });
    std::string out;
    for (const auto& l : letters) out += l;
    return out;
}

RegionLabel label_for(const std::vector<LVSolution>& solutions) {
    RegionLabel label;
    label.count = static_cast<int>(solutions.size());
    std::set<lv::Signature> sigs;
    for (const LVSolution& s : solutions) sigs.insert(s.signature);
    label.signatures.assign(sigs.begin(), sigs.end());
    if (solutions.empty()) {
        label.name = "NE";
        return label;
    }
    if (solutions.size() == 1) {
        label.name = letter_of(solutions[0].signature);
        return label;
    }
    // Letters of the distinct solutions; pairs give the overlap names of the
    // table, larger sets keep only the distinct letters (in table order) and
    // double a letter that occurs more than once.
    std::map<std::string, int> counts;
    for (const LVSolution& s : solutions) ++counts[letter_of(s.signature)];
    std::vector<std::string> letters;
    if (solutions.size() == 2) {
        for (const auto& [l, n] : counts) {
            for (int k = 0; k < n; ++k) letters.push_back(l);
        }
    } else {
        for (const auto& [l, n] : counts) {
            letters.push_back(l);
            if (n > 1 && counts.size() == 1) letters.push_back(l);
        }
    }
    label.name = overlap_name(letters);
    return label;
}

PointClassification classify_point(const DiagramSpec& spec, const Point& p2, const std::vector<NamedCurve>* curves) {
    spec.validate();
    shooting::MultiStartOptions ms;
    ms.shoot.blowup = spec.blowup;
    shooting::SolutionSet set = shooting::multi_start(spec.problem(p2), ms);
    PointClassification out;
    out.census = set.census;
    out.solutions = std::move(set.solutions);
    out.label = label_for(out.solutions);
    out.label.boundary = on_curve(p2, curves);
    return out;
}

std::vector<NamedCurve> trace_all_curves(const DiagramSpec& spec) {
    spec.validate();
    if (std::any_of(spec.curves.begin(), spec.curves.end(), is_frontier_curve)) return build_diagram(spec).curves;
    std::vector<NamedCurve> out;
    for (CurveId id : spec.curves) {
        switch (id) {
        case CurveId::Beta1:
        case CurveId::Beta2: out.push_back(beta_line(spec, id)); break;
        case CurveId::Alpha1:
        case CurveId::Alpha2: out.push_back(alpha_curve(spec, id)); break;
        case CurveId::Fold1:
        case CurveId::Fold2: out.push_back(fold_curve(spec, id, {})); break;
        default: break;
        }
    }
    return out;
}

DiagramArtifact build_diagram(const DiagramSpec& spec) {
    spec.validate();
    return Builder(spec).run();
}

std::vector<SliceStart> probe_starts(const DiagramSpec& spec, Control fixed, double value,
                                     const std::vector<double>& coords) {
    std::vector<SliceStart> starts;
    for (double c : coords) {
        const Point p = fixed == Control::X2 ? Point(value, c) : Point(c, value);
        shooting::MultiStartOptions ms;
        ms.shoot.blowup = spec.blowup;
        ms.lattice_shoot.blowup = spec.blowup;
        try {
            for (const LVSolution& s : shooting::multi_start(spec.problem(p), ms).solutions) starts.push_back({p, s.theta()});
        } catch (const Error&) {
        }
    }
    return starts;
}

std::vector<continuation::SolutionBranch> sheet_slice(const DiagramSpec& spec, Control fixed, double value,
                                                      std::vector<SliceStart> starts,
                                                      const continuation::StepPolicy& policy) {
    spec.validate();
    if (fixed == Control::FamilyParam) throw Error(ErrorCode::ConfigError, "a slice fixes x2 or y2");
    const Grid& g = spec.grid;
    const bool fixed_x = fixed == Control::X2;
    if (fixed_x ? (value < g.x_lo || value > g.x_hi) : (value < g.y_lo || value > g.y_hi)) {
        throw Error(ErrorCode::ConfigError, "slice value outside the grid window");
    }
    const Control control = fixed_x ? Control::Y2 : Control::X2;
    const double lo = fixed_x ? g.y_lo : g.x_lo;
    const double hi = fixed_x ? g.y_hi : g.x_hi;

    if (starts.empty()) {
        constexpr int kProbes = 6;
        std::vector<double> coords;
        for (int k = 0; k < kProbes; ++k) coords.push_back(lo * std::pow(hi / lo, (k + 0.5) / kProbes));
        starts = probe_starts(spec, fixed, value, coords);
    }

    std::vector<continuation::SolutionBranch> branches;
    for (const SliceStart& st : starts) {
        const double c0 = fixed_x ? st.p2.y() : st.p2.x();
        const bool known = std::any_of(branches.begin(), branches.end(), [&](const continuation::SolutionBranch& b) {
            for (const Vec4& th : branch_at(b, c0)) {
                if (relative_distance(th, st.theta) <= 0.05) return true;
            }
            return false;
        });
        if (known) continue;
        const InverseProblem pr = spec.problem(st.p2);
        continuation::SolutionBranch up, down;
        try {
            up = continuation::continue_branch(pr, st.theta, control, lo, hi, +1, policy);
            down = continuation::continue_branch(pr, st.theta, control, lo, hi, -1, policy);
        } catch (const Error&) {
            continue;
        }
        // Join: reversed downward half, then the upward half without its
        // duplicate start state.
        continuation::SolutionBranch b = up;
        b.states.assign(down.states.rbegin(), down.states.rend());
        b.tangents.assign(down.tangents.rbegin(), down.tangents.rend());
        for (auto& t : b.tangents) t = -t;
        double arc0 = b.states.empty() ? 0.0 : b.states.front().arclength;
        for (auto& s : b.states) s.arclength = arc0 - s.arclength;
        const double base = b.states.empty() ? 0.0 : b.states.back().arclength;
        for (std::size_t k = 1; k < up.states.size(); ++k) {
            auto s = up.states[k];
            s.arclength += base;
            b.states.push_back(s);
            b.tangents.push_back(up.tangents[k]);
        }
        b.detail = "ends: " + std::string(continuation::to_string(down.terminal)) + ", " +
                   std::string(continuation::to_string(up.terminal));
        branches.push_back(std::move(b));
    }
    return branches;
}

std::vector<continuation::FoldPoint> slice_folds(const std::vector<continuation::SolutionBranch>& branches) {
    std::vector<continuation::FoldPoint> out;
    for (const auto& b : branches) {
        for (auto& f : continuation::detect_fold(b)) out.push_back(std::move(f));
    }
    return out;
}

} // namespace trajid::diagram
