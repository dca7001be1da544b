#include "cli.hpp"

#include "trajid/diagram.hpp"
#include "trajid/io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <sstream>

namespace trajid::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"linear-invert", "affine-invert", "lv-invert", "diagram", "slice",
                                            "trace-curve", "continue-eps", "continue-p", "emit-svg"};
    return c;
}

void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

void add_lv(CLI::App* app, RunConfig& c, bool with_p2) {
    app->add_option("--p0", c.p0, "first data point x,y")->delimiter(',')->expected(2);
    app->add_option("--p1", c.p1, "second data point x,y")->delimiter(',')->expected(2);
    if (with_p2) app->add_option("--p2", c.p2, "third data point x,y")->delimiter(',')->expected(2);
    app->add_option("--times", c.times, "sample times t0,t1,t2")->delimiter(',')->expected(3);
    app->add_option("--family", c.family, "plain, rotated or saturated");
    app->add_option("--param", c.family_param, "rotation p or saturation eps");
    app->add_option("--blowup", c.blowup, "parameter magnitude treated as divergence");
}

void add_grid(CLI::App* app, RunConfig& c) {
    app->add_option("--nx", c.nx, "grid columns");
    app->add_option("--ny", c.ny, "grid rows");
    app->add_option("--x-range", c.x_range, "x2 window lo,hi")->delimiter(',')->expected(2);
    app->add_option("--y-range", c.y_range, "y2 window lo,hi")->delimiter(',')->expected(2);
}

void check_point(const std::vector<double>& p, const char* name) {
    if (p.size() != 2 || !(p[0] > 0.0) || !(p[1] > 0.0)) config_error(std::string(name) + " must be two positive numbers");
}

void check_range(const std::vector<double>& r, const char* name, bool positive) {
    if (r.size() != 2 || !(r[0] < r[1]) || (positive && !(r[0] > 0.0))) {
        config_error(std::string(name) + " must be lo,hi with lo < hi" + (positive ? " and lo > 0" : ""));
    }
}

void validate(const RunConfig& c) {
    if (std::find(commands().begin(), commands().end(), c.command) == commands().end()) {
        config_error("unknown command '" + c.command + "'");
    }
    if (c.max_winding < 0 || c.max_winding > 100) config_error("--max-winding must be in [0, 100]");
    check_point(c.p0, "--p0");
    check_point(c.p1, "--p1");
    check_point(c.p2, "--p2");
    if (c.times.size() != 3 || !(c.times[0] < c.times[1] && c.times[1] < c.times[2])) {
        config_error("--times must be three increasing values");
    }
    const lv::Family fam = io::parse_family(c.family);
    if (fam == lv::Family::Saturated && !(c.family_param >= 0.0)) config_error("saturation eps must be >= 0");
    if (c.nx < 2 || c.nx > 2000 || c.ny < 2 || c.ny > 2000) config_error("--nx/--ny must be in [2, 2000]");
    check_range(c.x_range, "--x-range", true);
    check_range(c.y_range, "--y-range", true);
    for (const auto& name : c.curves) {
        if (!diagram::parse_curve(name)) config_error("unknown curve '" + name + "'");
    }
    if (c.anchor_stride < 1) config_error("--anchor-stride must be >= 1");
    if (c.refine_budget < 0) config_error("--refine-budget must be >= 0");
    if (c.workers < 1 || c.workers > 256) config_error("--workers must be in [1, 256]");
    if (!(c.blowup > 1.0)) config_error("--blowup must exceed 1");
    if (c.fixed != "x2" && c.fixed != "y2") config_error("--fixed must be x2 or y2");
    check_range(c.eps_range, "--eps-range", false);
    if (c.eps_range[0] < 0.0) config_error("--eps-range must start at eps >= 0");
    if (!(c.integration_tol >= 1e-14 && c.integration_tol <= 1e-4)) config_error("--integration-tol must be in [1e-14, 1e-4]");
    if (c.max_states < 2) config_error("--max-states must be >= 2");
    if (c.component < 0 || c.component > 3) config_error("--component must be 0..3");
    if (c.command == "trace-curve" && !diagram::parse_curve(c.curve)) config_error("--curve must name a curve (e.g. C_f1)");
    if ((c.command == "linear-invert" || c.command == "affine-invert") && c.points.empty() == c.csv.empty()) {
        config_error("give exactly one of --points and --csv");
    }
    if (c.command == "emit-svg" && c.input.empty()) config_error("emit-svg needs --input");
}

// ---------------------------------------------------------------------------

lv::Point point(const std::vector<double>& v) { return {v[0], v[1]}; }

shooting::InverseProblem problem_of(const RunConfig& c) {
    shooting::InverseProblem p;
    p.p0 = point(c.p0);
    p.p1 = point(c.p1);
    p.p2 = point(c.p2);
    p.times = {c.times[0], c.times[1], c.times[2]};
    p.family = io::parse_family(c.family);
    p.family_param = c.family_param;
    return p;
}

diagram::DiagramSpec spec_of(const RunConfig& c, std::ostream& err) {
    diagram::DiagramSpec s;
    s.p0 = point(c.p0);
    s.p1 = point(c.p1);
    s.family = io::parse_family(c.family);
    s.family_param = c.family_param;
    s.grid = {c.x_range[0], c.x_range[1], c.y_range[0], c.y_range[1], c.nx, c.ny};
    if (!c.curves.empty()) {
        s.curves.clear();
        for (const auto& name : c.curves) s.curves.push_back(*diagram::parse_curve(name));
    }
    s.blowup = c.blowup;
    s.anchor_stride = c.anchor_stride;
    s.refine = c.refine;
    s.fold_seeding = c.fold_seeding;
    s.refine_budget = c.refine_budget;
    s.workers = c.workers;
    if (c.verbose) s.progress = [&err](const std::string& m) { err << m << '\n'; };
    s.validate();
    return s;
}

continuation::StepPolicy policy_of(const RunConfig& c) {
    continuation::StepPolicy p;
    p.blowup = c.blowup;
    p.integration_tol = c.integration_tol;
    p.max_states = static_cast<std::size_t>(c.max_states);
    return p;
}

fs::path out_path(const RunConfig& c, const std::string& name) {
    const fs::path file = fs::path(c.out_dir) / name;
    const fs::path dir = file.parent_path();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    return file;
}

void write_out(const RunConfig& c, const std::string& name, const std::string& content) {
    io::write_file(out_path(c, name).string(), content);
}

std::string branch_csv(const continuation::SolutionBranch& b) {
    std::ostringstream os;
    io::write_branch_csv(os, b);
    return os.str();
}

std::string curve_csv(const diagram::NamedCurve& curve) {
    std::ostringstream os;
    io::write_curves_csv(os, {curve});
    return os.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string slug(double v) {
    std::string s = io::fmt(v);
    std::replace(s.begin(), s.end(), '-', 'm');
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

// ---------------------------------------------------------------------------

inverse::TimedDataSet load_points(const RunConfig& c) {
    if (!c.csv.empty()) return io::parse_points_csv(io::read_file(c.csv));
    std::string text = c.points;
    std::replace(text.begin(), text.end(), ';', '\n');
    return io::parse_points_csv(text);
}

bool solver_code(ErrorCode code) { return code != ErrorCode::ConfigError && code != ErrorCode::IoError; }

int cmd_linear(const RunConfig& c, std::ostream& out) {
    const auto data = load_points(c);
    const bool affine = c.command == "affine-invert";
    const std::string file = affine ? "affine.json" : "linear.json";
    try {
        if (affine) {
            const auto sols = inverse::solve_affine(data, c.max_winding);
            write_out(c, file, io::affine_report_json(data, sols));
            out << sols.size() << " affine solution(s)\n";
            return sols.empty() ? 2 : 0;
        }
        const auto report = inverse::solve_linear(data, c.max_winding);
        write_out(c, file, io::linear_report_json(data, report));
        if (report.no_real_solution) {
            out << "no real solution (" << linalg::to_string(report.phi_class) << ")\n";
            return 2;
        }
        out << report.solutions.size() << " linear solution(s), class " << linalg::to_string(report.phi_class) << '\n';
        return 0;
    } catch (const Error& e) {
        if (!solver_code(e.code())) throw;
        write_out(c, file, io::error_json(c.command, e.code(), e.what()));
        out << e.what() << '\n';
        return 2;
    }
}

int cmd_lv_invert(const RunConfig& c, std::ostream& out) {
    const auto pr = problem_of(c);
    shooting::MultiStartOptions ms;
    ms.use_lattice = c.lattice;
    ms.shoot.blowup = c.blowup;
    ms.lattice_shoot.blowup = c.blowup;
    shooting::SolutionSet set;
    try {
        set = shooting::multi_start(pr, ms);
    } catch (const Error& e) {
        if (!solver_code(e.code())) throw;
        write_out(c, "solutions.json", io::error_json(c.command, e.code(), e.what()));
        out << e.what() << '\n';
        return 2;
    }
    write_out(c, "solutions.json", io::lv_solutions_json(pr, set));
    for (const auto& s : set.solutions) {
        out << s.signature.str() << ' ' << lv::region_letter(s.signature) << "  alpha1=" << io::fmt(s.params.alpha1)
            << " beta1=" << io::fmt(s.params.beta1) << " beta2=" << io::fmt(s.params.beta2)
            << " alpha2=" << io::fmt(s.params.alpha2);
        if (s.periodic()) out << "  " << shooting::rotation_label(s);
        out << '\n';
    }
    if (set.solutions.empty()) {
        out << "no solution found (" << set.census.seeds << " seeds)\n";
        return 2;
    }
    return 0;
}

int cmd_diagram(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const auto spec = spec_of(c, err);
    const auto art = diagram::build_diagram(spec);
    write_out(c, "diagram.json", io::diagram_json(art));
    write_out(c, "diagram.svg", io::diagram_svg(art));
    {
        std::ostringstream os;
        io::write_sheet_csv(os, art);
        write_out(c, "sheet.csv", os.str());
    }
    for (const auto& curve : art.curves) {
        write_out(c, "curves/" + std::string(diagram::curve_name(curve.id)) + ".csv", curve_csv(curve));
    }
    int failed = 0;
    for (const auto& cell : art.cells) failed += cell.failure.empty() ? 0 : 1;
    out << "regions:";
    for (const auto& r : art.regions) out << ' ' << r;
    out << "\nNE components: " << art.ne_components << "\nlabel changes: " << art.label_changes << " ("
        << art.unexplained_changes << " without a traced curve)\n";
    if (failed > 0) {
        out << failed << " cell(s) failed\n";
        return 2;
    }
    return 0;
}

continuation::Control fixed_of(const RunConfig& c) {
    return c.fixed == "x2" ? continuation::Control::X2 : continuation::Control::Y2;
}

int cmd_slice(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const auto spec = spec_of(c, err);
    const auto fixed = fixed_of(c);
    std::vector<diagram::SliceStart> starts;
    if (!c.probes.empty()) starts = diagram::probe_starts(spec, fixed, c.value, c.probes);
    const auto branches = diagram::sheet_slice(spec, fixed, c.value, starts, policy_of(c));
    const auto folds = diagram::slice_folds(branches);
    for (std::size_t b = 0; b < branches.size(); ++b) {
        write_out(c, "slice_branch" + std::to_string(b) + ".csv", branch_csv(branches[b]));
    }
    write_out(c, "slice.json", io::branches_json(branches, folds));
    write_out(c, "slice.svg", io::branches_svg(branches, folds, c.component));
    out << branches.size() << " branch(es), " << folds.size() << " fold(s)\n";
    for (const auto& f : folds) out << "fold at x2=" << io::fmt(f.p2.x()) << " y2=" << io::fmt(f.p2.y()) << '\n';
    return branches.empty() ? 2 : 0;
}

int cmd_trace_curve(const RunConfig& c, std::ostream& out, std::ostream& err) {
    auto spec = spec_of(c, err);
    const auto id = *diagram::parse_curve(c.curve);
    spec.curves = {id};
    const auto curves = diagram::trace_all_curves(spec);
    int points = 0;
    for (const auto& curve : curves) {
        if (curve.id != id) continue;
        write_out(c, "curves/" + c.curve + ".csv", curve_csv(curve));
        for (const auto& pl : curve.polylines) points += static_cast<int>(pl.points.size());
        out << c.curve << ": " << curve.polylines.size() << " polyline(s), " << points << " point(s)";
        if (!curve.note.empty()) out << " (" << curve.note << ')';
        out << '\n';
    }
    return points > 0 ? 0 : 2;
}

int cmd_continue_eps(const RunConfig& c, std::ostream& out) {
    auto pr = problem_of(c);
    pr.family = lv::Family::Plain;
    pr.family_param = 0.0;
    shooting::MultiStartOptions ms;
    ms.shoot.blowup = c.blowup;
    ms.lattice_shoot.blowup = c.blowup;
    const auto set = shooting::multi_start(pr, ms);
    const auto periodic = std::find_if(set.solutions.begin(), set.solutions.end(),
                                       [](const shooting::LVSolution& s) { return s.periodic(); });
    if (periodic == set.solutions.end()) {
        write_out(c, "continue_eps.json",
                  io::error_json(c.command, ErrorCode::NotPeriodic, "no periodic solution at P2 to rescale"));
        out << "no periodic solution at P2\n";
        return 2;
    }
    const auto members = shooting::enumerate_rescales(pr, *periodic, c.rotations);
    auto policy = policy_of(c);
    policy.stop_at_fold = true;
    auto sat = pr;
    sat.family = lv::Family::Saturated;
    sat.family_param = c.eps_range[0];

    json summary = json::array();
    std::vector<continuation::SolutionBranch> branches;
    std::vector<continuation::FoldPoint> folds;
    bool failures = false;
    for (const auto& m : members) {
        const std::string label = shooting::rotation_label(m);
        json entry{{"label", label}, {"rotations", *m.rotations}};
        try {
            auto b = continuation::continue_branch(sat, m.theta(), continuation::Control::FamilyParam, c.eps_range[0],
                                                   c.eps_range[1], +1, policy);
            const double reached = b.states.empty() ? c.eps_range[0] : b.states.back().control;
            entry["terminal"] = std::string(continuation::to_string(b.terminal));
            entry["eps_reached"] = reached;
            for (auto& f : continuation::detect_fold(b)) {
                entry["fold_eps"] = f.control;
                folds.push_back(f);
            }
            write_out(c, "eps_" + label + ".csv", branch_csv(b));
            out << label << ": " << continuation::to_string(b.terminal) << " at eps=" << io::fmt(reached) << '\n';
            failures = failures || b.terminal == continuation::Event::StepFailure;
            branches.push_back(std::move(b));
        } catch (const Error& e) {
            if (!solver_code(e.code())) throw;
            entry["error"] = e.what();
            out << label << ": " << e.what() << '\n';
            failures = true;
        }
        summary.push_back(entry);
    }
    write_out(c, "continue_eps.json", dump(json{{"command", c.command}, {"branches", summary}}));
    write_out(c, "continue_eps_branches.json", io::branches_json(branches, folds));
    write_out(c, "continue_eps.svg", io::branches_svg(branches, folds, c.component));
    return failures ? 2 : 0;
}

int cmd_continue_p(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const auto fixed = fixed_of(c);
    const std::vector<double> probes = c.probes.empty() ? std::vector<double>{1.05, 1.2, 1.5} : c.probes;
    json summary = json::array();
    for (double p : c.p_values) {
        RunConfig rc = c;
        rc.family = "rotated";
        rc.family_param = p;
        const auto spec = spec_of(rc, err);
        const auto starts = diagram::probe_starts(spec, fixed, c.value, probes);
        const auto branches = diagram::sheet_slice(spec, fixed, c.value, starts, policy_of(c));
        const auto folds = diagram::slice_folds(branches);
        for (std::size_t b = 0; b < branches.size(); ++b) {
            write_out(c, "p_" + slug(p) + "_branch" + std::to_string(b) + ".csv", branch_csv(branches[b]));
        }
        json fj = json::array();
        for (const auto& f : folds) fj.push_back({{"x2", f.p2.x()}, {"y2", f.p2.y()}});
        summary.push_back({{"p", p}, {"branches", branches.size()}, {"fold_present", !folds.empty()}, {"folds", fj}});
        out << "p=" << io::fmt(p) << ": " << branches.size() << " branch(es), fold " << (folds.empty() ? "absent" : "present")
            << '\n';
    }
    write_out(c, "continue_p.json", dump(json{{"command", c.command}, {"fixed", c.fixed}, {"value", c.value}, {"runs", summary}}));
    return 0;
}

int cmd_emit_svg(const RunConfig& c, std::ostream& out) {
    const std::string text = io::read_file(c.input);
    const std::string stem = fs::path(c.input).stem().string();
    json probe;
    try {
        probe = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, std::string("invalid JSON: ") + e.what());
    }
    std::string svg;
    if (probe.contains("cells")) {
        svg = io::diagram_svg(io::parse_diagram_json(text));
    } else if (probe.contains("branches") && probe.contains("folds")) {
        const auto loaded = io::parse_branches_json(text);
        svg = io::branches_svg(loaded.branches, loaded.folds, c.component);
    } else {
        throw Error(ErrorCode::IoError, c.input + " is neither a diagram nor a branch file");
    }
    write_out(c, stem + ".svg", svg);
    out << (fs::path(c.out_dir) / (stem + ".svg")).string() << '\n';
    return 0;
}

} // namespace

RunConfig parse_args(const std::vector<std::string>& args, std::string* help) {
    RunConfig c;
    CLI::App app{"Exact inverse problems for linear, affine and Lotka-Volterra systems", "trajid"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every subcommand");

    auto common = [&](CLI::App* s) {
        s->add_option("-o,--out", c.out_dir, "output directory");
        s->add_option("--seed", c.seed, "seed for randomized runs");
        s->add_flag("-v,--verbose", c.verbose, "progress messages on stderr");
    };

    for (const char* name : {"linear-invert", "affine-invert"}) {
        auto* s = app.add_subcommand(name, std::string(name) == "linear-invert" ? "recover A from x' = A x samples"
                                                                              : "recover (A, c) from x' = A x + c samples");
        common(s);
        s->add_option("--points", c.points, "inline data \"t,x,y;t,x,y;...\"");
        s->add_option("--csv", c.csv, "CSV file with rows t,x1,...,xn");
        s->add_option("--max-winding", c.max_winding, "largest logarithm winding to enumerate");
    }
    {
        auto* s = app.add_subcommand("lv-invert", "Lotka-Volterra parameters through three points");
        common(s);
        add_lv(s, c, true);
        s->add_flag("!--no-lattice", c.lattice, "skip the 5^4 lattice seeds");
    }
    {
        auto* s = app.add_subcommand("diagram", "classify the P2 plane and trace the boundary curves");
        common(s);
        add_lv(s, c, false);
        add_grid(s, c);
        s->add_option("--curves", c.curves, "curve ids (default: all)")->delimiter(',');
        s->add_option("--anchor-stride", c.anchor_stride, "full multi-start every n-th cell");
        s->add_flag("!--no-refine", c.refine, "skip the refinement pass");
        s->add_flag("!--no-fold-seeding", c.fold_seeding, "do not trace unrequested fold curves for seeding");
        s->add_option("--refine-budget", c.refine_budget, "cells re-examined by refinement");
        s->add_option("--workers", c.workers, "threads for grid classification");
    }
    auto slice_opts = [&](CLI::App* s) {
        s->add_option("--fixed", c.fixed, "coordinate held fixed: x2 or y2");
        s->add_option("--value", c.value, "value of the fixed coordinate");
        s->add_option("--probes", c.probes, "multi-start positions along the slice")->delimiter(',');
        s->add_option("--integration-tol", c.integration_tol, "integration tolerance during continuation");
        s->add_option("--max-states", c.max_states, "state budget per branch");
    };
    {
        auto* s = app.add_subcommand("slice", "solution branches along a line x2 = const or y2 = const");
        common(s);
        add_lv(s, c, false);
        add_grid(s, c);
        slice_opts(s);
        s->add_option("--component", c.component, "parameter plotted: 0 alpha1, 1 beta1, 2 beta2, 3 alpha2");
    }
    {
        auto* s = app.add_subcommand("trace-curve", "trace one named boundary curve");
        common(s);
        add_lv(s, c, false);
        add_grid(s, c);
        s->add_option("--curve", c.curve, "C_alpha1, C_alpha2, C_beta1, C_beta2, C_s, C_p1, C_p2, C_f1, C_f2")->required();
        s->add_option("--anchor-stride", c.anchor_stride, "full multi-start every n-th cell (frontier curves)");
        s->add_option("--workers", c.workers, "threads for grid classification (frontier curves)");
    }
    {
        auto* s = app.add_subcommand("continue-eps", "follow the rescaled periodic family into the saturated field");
        common(s);
        add_lv(s, c, true);
        s->add_option("--rotations", c.rotations, "rotation counts to continue")->delimiter(',');
        s->add_option("--eps-range", c.eps_range, "eps interval lo,hi")->delimiter(',')->expected(2);
        s->add_option("--integration-tol", c.integration_tol, "integration tolerance during continuation");
        s->add_option("--max-states", c.max_states, "state budget per branch");
        s->add_option("--component", c.component, "parameter plotted: 0 alpha1, 1 beta1, 2 beta2, 3 alpha2");
    }
    {
        auto* s = app.add_subcommand("continue-p", "fold detection on a slice for several rotated fields");
        common(s);
        add_lv(s, c, false);
        add_grid(s, c);
        slice_opts(s);
        s->add_option("--p-values", c.p_values, "rotation parameters")->delimiter(',');
    }
    {
        auto* s = app.add_subcommand("emit-svg", "render a diagram or branch JSON file as SVG");
        common(s);
        s->add_option("-i,--input", c.input, "diagram.json or a branch JSON file")->required();
        s->add_option("--component", c.component, "parameter plotted for branch files");
    }

    std::vector<const char*> argv{"trajid"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        if (help) *help = app.help();
        return RunConfig{};
    } catch (const CLI::CallForAllHelp&) {
        if (help) *help = app.help("", CLI::AppFormatMode::All);
        return RunConfig{};
    } catch (const CLI::ParseError& e) {
        config_error(e.what());
    }
    for (const auto* s : app.get_subcommands()) c.command = s->get_name();
    validate(c);
    return c;
}

int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
    validate(c);
    if (c.command == "linear-invert" || c.command == "affine-invert") return cmd_linear(c, out);
    if (c.command == "lv-invert") return cmd_lv_invert(c, out);
    if (c.command == "diagram") return cmd_diagram(c, out, err);
    if (c.command == "slice") return cmd_slice(c, out, err);
    if (c.command == "trace-curve") return cmd_trace_curve(c, out, err);
    if (c.command == "continue-eps") return cmd_continue_eps(c, out);
    if (c.command == "continue-p") return cmd_continue_p(c, out, err);
    return cmd_emit_svg(c, out);
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        std::string help;
        const RunConfig c = parse_args(args, &help);
        if (c.command.empty()) {
            out << help;
            return 0;
        }
        return run(c, out, err);
    } catch (const Error& e) {
        err << "trajid: " << e.what() << '\n';
        return solver_code(e.code()) ? 2 : 1;
    } catch (const std::exception& e) {
        err << "trajid: " << e.what() << '\n';
        return 1;
    }
}

} // namespace trajid::cli
