#include "trajid/io.hpp"

#include "trajid/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace trajid::io {

using json = nlohmann::ordered_json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double get_num(const json& j, const char* key, double fallback = 0.0) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<double>();
}

json vec_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
    return a;
}

json mat_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
    return rows;
}

json point_json(const lv::Point& p) { return json::array({num(p.x()), num(p.y())}); }

lv::Point point_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json data_json(const inverse::TimedDataSet& d) {
    json pts = json::array();
    for (std::size_t i = 0; i < d.points.size(); ++i) {
        pts.push_back({{"t", num(d.time(i))}, {"x", vec_json(d.points[i])}});
    }
    return pts;
}

json problem_json(const shooting::InverseProblem& p) {
    return {{"p0", point_json(p.p0)},
            {"p1", point_json(p.p1)},
            {"p2", point_json(p.p2)},
            {"times", json::array({num(p.times[0]), num(p.times[1]), num(p.times[2])})},
            {"family", std::string(lv::to_string(p.family))},
            {"family_param", num(p.family_param)}};
}

shooting::InverseProblem problem_from(const json& j) {
    shooting::InverseProblem p;
    p.p0 = point_from(j.at("p0"));
    p.p1 = point_from(j.at("p1"));
    p.p2 = point_from(j.at("p2"));
    if (j.contains("times")) {
        for (int k = 0; k < 3; ++k) p.times[k] = j.at("times").at(k).get<double>();
    }
    p.family = parse_family(j.value("family", std::string("plain")));
    p.family_param = get_num(j, "family_param");
    return p;
}

json solution_json(const shooting::LVSolution& s) {
    json o{{"alpha1", num(s.params.alpha1)},
           {"beta1", num(s.params.beta1)},
           {"beta2", num(s.params.beta2)},
           {"alpha2", num(s.params.alpha2)},
           {"signature", s.signature.str()},
           {"dynamics", std::string(lv::dynamics_type(s.signature))},
           {"residual", num(s.residual)}};
    if (s.period) {
        o["period"] = num(*s.period);
        o["rotations"] = *s.rotations;
        if (s.turns) o["turns"] = num(*s.turns);
        o["rotation_label"] = shooting::rotation_label(s);
        o["canonical"] = s.canonical;
    }
    return o;
}

shooting::LVSolution solution_from(const json& j, lv::Family family, double family_param) {
    shooting::LVSolution s;
    s.params.alpha1 = get_num(j, "alpha1");
    s.params.beta1 = get_num(j, "beta1");
    s.params.beta2 = get_num(j, "beta2");
    s.params.alpha2 = get_num(j, "alpha2");
    s.params.family = family;
    s.params.family_param = family_param;
    s.signature = lv::Signature::parse(j.at("signature").get<std::string>());
    s.residual = get_num(j, "residual", std::numeric_limits<double>::quiet_NaN());
    if (j.contains("period")) {
        s.period = get_num(j, "period");
        s.rotations = j.at("rotations").get<int>();
        if (j.contains("turns")) s.turns = get_num(j, "turns");
        s.canonical = j.value("canonical", false);
    }
    return s;
}

json census_json(const shooting::Census& c) {
    return {{"seeds", c.seeds},
            {"converged", c.converged},
            {"no_convergence", c.no_convergence},
            {"blowup", c.blowup},
            {"integration_failure", c.integration_failure},
            {"duplicates", c.duplicates}};
}

shooting::Census census_from(const json& j) {
    shooting::Census c;
    c.seeds = j.value("seeds", 0);
    c.converged = j.value("converged", 0);
    c.no_convergence = j.value("no_convergence", 0);
    c.blowup = j.value("blowup", 0);
    c.integration_failure = j.value("integration_failure", 0);
    c.duplicates = j.value("duplicates", 0);
    return c;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, std::string("invalid JSON: ") + e.what());
    }
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::size_t used = 0;
    try {
        out = std::stod(s, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == s.size();
}

} // namespace

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << content;
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

inverse::TimedDataSet parse_points_csv(const std::string& text) {
    inverse::TimedDataSet d;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    int width = -1;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(trim(f));
        std::vector<double> vals(fields.size());
        bool numeric = true;
        for (std::size_t k = 0; k < fields.size(); ++k) numeric = numeric && parse_double(fields[k], vals[k]);
        if (!numeric) {
            if (first) {
                first = false;
                continue;
            }
            throw Error(ErrorCode::IoError, "non-numeric field on line " + std::to_string(lineno));
        }
        first = false;
        if (vals.size() < 2) throw Error(ErrorCode::IoError, "need t and at least one coordinate on line " + std::to_string(lineno));
        if (width < 0) width = static_cast<int>(vals.size());
        if (static_cast<int>(vals.size()) != width) throw Error(ErrorCode::IoError, "ragged row on line " + std::to_string(lineno));
        d.times.push_back(vals[0]);
        d.points.emplace_back(Eigen::Map<const Eigen::VectorXd>(vals.data() + 1, width - 1));
    }
    if (d.points.empty()) throw Error(ErrorCode::IoError, "no data rows");
    return d;
}

lv::Family parse_family(std::string_view name) {
    for (lv::Family f : {lv::Family::Plain, lv::Family::Rotated, lv::Family::Saturated}) {
        if (lv::to_string(f) == name) return f;
    }
    throw Error(ErrorCode::ConfigError, "unknown family '" + std::string(name) + "' (plain, rotated, saturated)");
}

void write_curves_csv(std::ostream& os, const std::vector<diagram::NamedCurve>& curves) {
    os << "curve_id,x2,y2,alpha1,beta1,beta2,alpha2,branch_id\n";
    for (const auto& c : curves) {
        for (std::size_t b = 0; b < c.polylines.size(); ++b) {
            for (const auto& p : c.polylines[b].points) {
                os << diagram::curve_name(c.id) << ',' << fmt(p.p2.x()) << ',' << fmt(p.p2.y()) << ','
                   << fmt(p.params.alpha1) << ',' << fmt(p.params.beta1) << ',' << fmt(p.params.beta2) << ','
                   << fmt(p.params.alpha2) << ',' << b << '\n';
            }
        }
    }
}

void write_branch_csv(std::ostream& os, const continuation::SolutionBranch& branch) {
    os << "control,x2,y2,alpha1,beta1,beta2,alpha2,event\n";
    for (const auto& s : branch.states) {
        os << fmt(s.control) << ',' << fmt(s.p2.x()) << ',' << fmt(s.p2.y()) << ',' << fmt(s.params.alpha1) << ','
           << fmt(s.params.beta1) << ',' << fmt(s.params.beta2) << ',' << fmt(s.params.alpha2) << ','
           << continuation::to_string(s.event) << '\n';
    }
}

void write_sheet_csv(std::ostream& os, const diagram::DiagramArtifact& art) {
    os << "x2,y2,beta1,signature\n";
    for (const auto& c : art.cells) {
        for (const auto& s : c.solutions) {
            os << fmt(c.center.x()) << ',' << fmt(c.center.y()) << ',' << fmt(s.params.beta1) << ',' << s.signature.str()
               << '\n';
        }
    }
}

std::string linear_report_json(const inverse::TimedDataSet& data, const inverse::LinearReport& report) {
    json sols = json::array();
    for (const auto& s : report.solutions) {
        sols.push_back({{"A", mat_json(s.a)},
                        {"b", vec_json(s.b)},
                        {"branch", s.branch},
                        {"windings", s.windings},
                        {"stability", std::string(inverse::to_string(s.stability))}});
    }
    json o{{"command", "linear-invert"},
           {"data", data_json(data)},
           {"phi_class", std::string(linalg::to_string(report.phi_class))},
           {"no_real_solution", report.no_real_solution},
           {"solutions", sols}};
    return dump(o);
}

std::string affine_report_json(const inverse::TimedDataSet& data, const std::vector<inverse::AffineSolution>& sols) {
    json arr = json::array();
    for (const auto& s : sols) {
        const auto cls = inverse::classify_affine_regime(s);
        json o{{"A", mat_json(s.a)},
               {"c", vec_json(s.c)},
               {"b", vec_json(s.b)},
               {"branch", s.branch},
               {"regime", std::string(inverse::to_string(s.regime))}};
        if (cls.fixed_point) o["fixed_point"] = vec_json(*cls.fixed_point);
        arr.push_back(o);
    }
    return dump(json{{"command", "affine-invert"}, {"data", data_json(data)}, {"solutions", arr}});
}

std::string lv_solutions_json(const shooting::InverseProblem& problem, const shooting::SolutionSet& set) {
    json sols = json::array();
    for (const auto& s : set.solutions) sols.push_back(solution_json(s));
    json o{{"command", "lv-invert"},
           {"problem", problem_json(problem)},
           {"continuum", set.continuum},
           {"census", census_json(set.census)},
           {"solutions", sols}};
    return dump(o);
}

std::string error_json(const std::string& command, ErrorCode code, const std::string& message) {
    return dump(json{{"command", command}, {"error", {{"code", std::string(to_string(code))}, {"message", message}}}});
}

LoadedSolutions parse_lv_solutions_json(const std::string& text) {
    const json j = parse(text);
    try {
        LoadedSolutions out;
        out.problem = problem_from(j.at("problem"));
        for (const auto& s : j.at("solutions")) {
            out.solutions.push_back(solution_from(s, out.problem.family, out.problem.family_param));
        }
        return out;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, std::string("malformed solution file: ") + e.what());
    }
}

namespace {

json spec_json(const diagram::DiagramSpec& s, diagram::OrderingCase ordering) {
    json curves = json::array();
    for (auto id : s.curves) curves.push_back(std::string(diagram::curve_name(id)));
    return {{"p0", point_json(s.p0)},
            {"p1", point_json(s.p1)},
            {"family", std::string(lv::to_string(s.family))},
            {"family_param", num(s.family_param)},
            {"grid",
             {{"x_lo", num(s.grid.x_lo)},
              {"x_hi", num(s.grid.x_hi)},
              {"y_lo", num(s.grid.y_lo)},
              {"y_hi", num(s.grid.y_hi)},
              {"nx", s.grid.nx},
              {"ny", s.grid.ny}}},
            {"curves", curves},
            {"blowup", num(s.blowup)},
            {"anchor_stride", s.anchor_stride},
            {"refine", s.refine},
            {"fold_seeding", s.fold_seeding},
            {"ordering_case", std::string(diagram::to_string(ordering))}};
}

json params_json(const lv::LVParams& p) {
    return {{"alpha1", num(p.alpha1)}, {"beta1", num(p.beta1)}, {"beta2", num(p.beta2)}, {"alpha2", num(p.alpha2)}};
}

} // namespace

std::string diagram_json(const diagram::DiagramArtifact& art) {
    json cells = json::array();
    for (const auto& c : art.cells) {
        json sigs = json::array();
        for (const auto& s : c.label.signatures) sigs.push_back(s.str());
        json sols = json::array();
        for (const auto& s : c.solutions) sols.push_back(solution_json(s));
        json o{{"x2", num(c.center.x())},
               {"y2", num(c.center.y())},
               {"label", c.label.name},
               {"count", c.label.count},
               {"signatures", sigs},
               {"solutions", sols}};
        if (!c.label.boundary.empty()) o["boundary"] = c.label.boundary;
        if (!c.sub_labels.empty()) o["sub_labels"] = c.sub_labels;
        if (!c.failure.empty()) o["failure"] = c.failure;
        cells.push_back(o);
    }
    json curves = json::array();
    for (const auto& c : art.curves) {
        json pls = json::array();
        for (const auto& pl : c.polylines) {
            json pts = json::array();
            for (const auto& p : pl.points) {
                json q = params_json(p.params);
                q["x2"] = num(p.p2.x());
                q["y2"] = num(p.p2.y());
                pts.push_back(q);
            }
            pls.push_back(pts);
        }
        curves.push_back({{"id", std::string(diagram::curve_name(c.id))}, {"note", c.note}, {"polylines", pls}});
    }
    json census = census_json(art.census);
    census["regions"] = art.regions;
    census["ne_components"] = art.ne_components;
    census["label_changes"] = art.label_changes;
    census["unexplained_changes"] = art.unexplained_changes;
    json o{{"spec", spec_json(art.spec, art.ordering)}, {"cells", cells}, {"curves", curves}, {"census", census}};
    return dump(o);
}

diagram::DiagramArtifact parse_diagram_json(const std::string& text) {
    const json j = parse(text);
    try {
        diagram::DiagramArtifact art;
        const json& s = j.at("spec");
        art.spec.p0 = point_from(s.at("p0"));
        art.spec.p1 = point_from(s.at("p1"));
        art.spec.family = parse_family(s.at("family").get<std::string>());
        art.spec.family_param = get_num(s, "family_param");
        const json& g = s.at("grid");
        art.spec.grid = {get_num(g, "x_lo"), get_num(g, "x_hi"), get_num(g, "y_lo"), get_num(g, "y_hi"),
                         g.at("nx").get<int>(), g.at("ny").get<int>()};
        art.spec.curves.clear();
        for (const auto& c : s.at("curves")) {
            if (auto id = diagram::parse_curve(c.get<std::string>())) art.spec.curves.push_back(*id);
        }
        art.spec.blowup = get_num(s, "blowup", 1e6);
        art.spec.anchor_stride = s.value("anchor_stride", 10);
        art.spec.refine = s.value("refine", true);
        art.spec.fold_seeding = s.value("fold_seeding", true);
        art.ordering = diagram::ordering_case(art.spec.p0, art.spec.p1);

        const int nx = art.spec.grid.nx;
        std::size_t k = 0;
        for (const auto& c : j.at("cells")) {
            diagram::Cell cell;
            cell.i = static_cast<int>(k % nx);
            cell.j = static_cast<int>(k / nx);
            cell.center = {get_num(c, "x2"), get_num(c, "y2")};
            cell.label.name = c.at("label").get<std::string>();
            cell.label.count = c.at("count").get<int>();
            for (const auto& sg : c.at("signatures")) cell.label.signatures.push_back(lv::Signature::parse(sg.get<std::string>()));
            for (const auto& sol : c.at("solutions")) {
                cell.solutions.push_back(solution_from(sol, art.spec.family, art.spec.family_param));
            }
            cell.label.boundary = c.value("boundary", std::string());
            if (c.contains("sub_labels")) cell.sub_labels = c.at("sub_labels").get<std::vector<std::string>>();
            cell.failure = c.value("failure", std::string());
            art.cells.push_back(std::move(cell));
            ++k;
        }
        for (const auto& c : j.at("curves")) {
            diagram::NamedCurve nc;
            const auto id = diagram::parse_curve(c.at("id").get<std::string>());
            if (!id) throw Error(ErrorCode::IoError, "unknown curve id");
            nc.id = *id;
            nc.note = c.value("note", std::string());
            for (const auto& pl : c.at("polylines")) {
                diagram::CurvePolyline line;
                for (const auto& p : pl) {
                    continuation::CurvePoint cp;
                    cp.p2 = {get_num(p, "x2"), get_num(p, "y2")};
                    cp.params.alpha1 = get_num(p, "alpha1");
                    cp.params.beta1 = get_num(p, "beta1");
                    cp.params.beta2 = get_num(p, "beta2");
                    cp.params.alpha2 = get_num(p, "alpha2");
                    cp.params.family = art.spec.family;
                    cp.params.family_param = art.spec.family_param;
                    line.points.push_back(cp);
                }
                nc.polylines.push_back(std::move(line));
            }
            art.curves.push_back(std::move(nc));
        }
        const json& cs = j.at("census");
        art.census = census_from(cs);
        art.regions = cs.value("regions", std::vector<std::string>{});
        art.ne_components = cs.value("ne_components", 0);
        art.label_changes = cs.value("label_changes", 0);
        art.unexplained_changes = cs.value("unexplained_changes", 0);
        return art;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, std::string("malformed diagram file: ") + e.what());
    }
}

std::string branches_json(const std::vector<continuation::SolutionBranch>& branches,
                          const std::vector<continuation::FoldPoint>& folds) {
    json bs = json::array();
    for (const auto& b : branches) {
        json states = json::array();
        for (const auto& s : b.states) {
            json o = params_json(s.params);
            o["control"] = num(s.control);
            o["x2"] = num(s.p2.x());
            o["y2"] = num(s.p2.y());
            o["residual"] = num(s.residual);
            o["event"] = std::string(continuation::to_string(s.event));
            states.push_back(o);
        }
        bs.push_back({{"control", std::string(continuation::to_string(b.control))},
                      {"terminal", std::string(continuation::to_string(b.terminal))},
                      {"detail", b.detail},
                      {"states", states}});
    }
    json fs = json::array();
    for (const auto& f : folds) {
        json o = params_json(f.params);
        o["control"] = num(f.control);
        o["x2"] = num(f.p2.x());
        o["y2"] = num(f.p2.y());
        fs.push_back(o);
    }
    return dump(json{{"branches", bs}, {"folds", fs}});
}

namespace {

continuation::Control parse_control(const std::string& name) {
    for (auto c : {continuation::Control::X2, continuation::Control::Y2, continuation::Control::FamilyParam}) {
        if (continuation::to_string(c) == name) return c;
    }
    throw Error(ErrorCode::IoError, "unknown control '" + name + "'");
}

continuation::Event parse_event(const std::string& name) {
    using continuation::Event;
    for (auto e : {Event::None, Event::Fold, Event::Blowup, Event::ControlLimit, Event::StepFailure, Event::StateLimit,
                   Event::Stalled}) {
        if (continuation::to_string(e) == name) return e;
    }
    throw Error(ErrorCode::IoError, "unknown event '" + name + "'");
}

void read_params(const json& j, lv::LVParams& p) {
    p.alpha1 = get_num(j, "alpha1");
    p.beta1 = get_num(j, "beta1");
    p.beta2 = get_num(j, "beta2");
    p.alpha2 = get_num(j, "alpha2");
}

} // namespace

LoadedBranches parse_branches_json(const std::string& text) {
    const json j = parse(text);
    try {
        LoadedBranches out;
        for (const auto& b : j.at("branches")) {
            continuation::SolutionBranch br;
            br.control = parse_control(b.at("control").get<std::string>());
            br.terminal = parse_event(b.at("terminal").get<std::string>());
            br.detail = b.value("detail", std::string());
            for (const auto& s : b.at("states")) {
                continuation::BranchState st;
                st.control = get_num(s, "control");
                st.p2 = {get_num(s, "x2"), get_num(s, "y2")};
                read_params(s, st.params);
                st.residual = get_num(s, "residual");
                st.event = parse_event(s.value("event", std::string()));
                br.states.push_back(st);
            }
            out.branches.push_back(std::move(br));
        }
        for (const auto& f : j.at("folds")) {
            continuation::FoldPoint fp;
            fp.control = get_num(f, "control");
            fp.p2 = {get_num(f, "x2"), get_num(f, "y2")};
            read_params(f, fp.params);
            out.folds.push_back(fp);
        }
        return out;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, std::string("malformed branch file: ") + e.what());
    }
}

// --- SVG -------------------------------------------------------------------

namespace {

const std::map<std::string, std::string>& region_colours() {
    static const std::map<std::string, std::string> c{
        {"R", "#e06666"},  {"G", "#6aa84f"},  {"M", "#c27ba0"},  {"C", "#76a5af"},  {"B1", "#6fa8dc"},
        {"B2", "#9fc5e8"}, {"B3", "#ffd966"}, {"B4", "#f6b26b"}, {"NE", "#ffffff"}, {"RR", "#990000"},
        {"GG", "#274e13"}, {"MM", "#741b47"}, {"CC", "#134f5c"}, {"RG", "#b45f06"}, {"GM", "#8e7cc3"},
        {"RM", "#a64d79"}, {"GC", "#45818e"}, {"RC", "#783f04"}};
    return c;
}

std::string colour_of(const std::string& name) {
    const auto& c = region_colours();
    const auto it = c.find(name);
    return it == c.end() ? "#999999" : it->second;
}

std::string curve_style(diagram::CurveId id) {
    using diagram::CurveId;
    switch (id) {
    case CurveId::Alpha1:
    case CurveId::Alpha2: return "stroke=\"#000000\" stroke-width=\"1.5\"";
    case CurveId::Beta1:
    case CurveId::Beta2: return "stroke=\"#000000\" stroke-width=\"1.5\"";
    case CurveId::Separatrix: return "stroke=\"#000000\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"";
    case CurveId::Periodic1:
    case CurveId::Periodic2: return "stroke=\"#1b5e20\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"";
    case CurveId::Fold1:
    case CurveId::Fold2: return "stroke=\"#0b3d91\" stroke-width=\"2\"";
    }
    return "stroke=\"#000000\"";
}

struct Frame {
    double x_lo, x_hi, y_lo, y_hi;
    double left = 60, top = 20, width = 640, height = 640;
    [[nodiscard]] double px(double x) const { return left + (x - x_lo) / (x_hi - x_lo) * width; }
    [[nodiscard]] double py(double y) const { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * height; }
};

std::string f3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void axes(std::ostringstream& os, const Frame& f, const std::string& xlabel, const std::string& ylabel) {
    os << "<rect x=\"" << f3(f.left) << "\" y=\"" << f3(f.top) << "\" width=\"" << f3(f.width) << "\" height=\""
       << f3(f.height) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double x = f.x_lo + (f.x_hi - f.x_lo) * k / 4.0;
        const double y = f.y_lo + (f.y_hi - f.y_lo) * k / 4.0;
        os << "<text x=\"" << f3(f.px(x)) << "\" y=\"" << f3(f.top + f.height + 16) << "\" font-size=\"11\" text-anchor=\"middle\">"
           << f3(x) << "</text>\n";
        os << "<text x=\"" << f3(f.left - 6) << "\" y=\"" << f3(f.py(y) + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
           << f3(y) << "</text>\n";
    }
    os << "<text x=\"" << f3(f.left + f.width / 2) << "\" y=\"" << f3(f.top + f.height + 34)
       << "\" font-size=\"13\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    os << "<text x=\"14\" y=\"" << f3(f.top + f.height / 2) << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << f3(f.top + f.height / 2) << ")\">" << ylabel << "</text>\n";
}

} // namespace

std::string diagram_svg(const diagram::DiagramArtifact& art) {
    const auto& g = art.spec.grid;
    Frame f{g.x_lo, g.x_hi, g.y_lo, g.y_hi};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"880\" height=\"720\" viewBox=\"0 0 880 720\">\n";
    os << "<rect width=\"880\" height=\"720\" fill=\"#ffffff\"/>\n";
    const double cw = f.width / g.nx, ch = f.height / g.ny;
    for (const auto& c : art.cells) {
        os << "<rect x=\"" << f3(f.left + c.i * cw) << "\" y=\"" << f3(f.top + (g.ny - 1 - c.j) * ch) << "\" width=\""
           << f3(cw + 0.05) << "\" height=\"" << f3(ch + 0.05) << "\" fill=\"" << colour_of(c.label.name) << "\"/>\n";
    }
    for (const auto& c : art.curves) {
        for (const auto& pl : c.polylines) {
            if (pl.points.size() < 2) continue;
            os << "<polyline fill=\"none\" " << curve_style(c.id) << " points=\"";
            for (std::size_t k = 0; k < pl.points.size(); ++k) {
                const auto& p = pl.points[k].p2;
                os << (k ? " " : "") << f3(std::clamp(f.px(p.x()), f.left, f.left + f.width)) << ','
                   << f3(std::clamp(f.py(p.y()), f.top, f.top + f.height));
            }
            os << "\"/>\n";
        }
    }
    for (const auto& [p, name] : {std::pair{art.spec.p0, "P0"}, std::pair{art.spec.p1, "P1"}}) {
        os << "<circle cx=\"" << f3(f.px(p.x())) << "\" cy=\"" << f3(f.py(p.y())) << "\" r=\"4\" fill=\"#000000\"/>\n";
        os << "<text x=\"" << f3(f.px(p.x()) + 6) << "\" y=\"" << f3(f.py(p.y()) - 6) << "\" font-size=\"12\">" << name
           << "</text>\n";
    }
    axes(os, f, "x2", "y2");
    double ly = 30;
    for (const auto& name : art.regions) {
        os << "<rect x=\"720\" y=\"" << f3(ly - 10) << "\" width=\"14\" height=\"14\" fill=\"" << colour_of(name)
           << "\" stroke=\"#000000\"/>\n";
        os << "<text x=\"740\" y=\"" << f3(ly + 2) << "\" font-size=\"12\">" << name << "</text>\n";
        ly += 20;
    }
    os << "</svg>\n";
    return os.str();
}

std::string branches_svg(const std::vector<continuation::SolutionBranch>& branches,
                         const std::vector<continuation::FoldPoint>& folds, int component) {
    component = std::clamp(component, 0, 3);
    static const char* names[] = {"alpha1", "beta1", "beta2", "alpha2"};
    double c_lo = 1e300, c_hi = -1e300, v_lo = 1e300, v_hi = -1e300;
    for (const auto& b : branches) {
        for (const auto& s : b.states) {
            const double v = s.params.theta()[component];
            c_lo = std::min(c_lo, s.control);
            c_hi = std::max(c_hi, s.control);
            v_lo = std::min(v_lo, v);
            v_hi = std::max(v_hi, v);
        }
    }
    if (!(c_hi > c_lo)) {
        c_lo -= 1.0;
        c_hi += 1.0;
    }
    if (!(v_hi > v_lo)) {
        v_lo -= 1.0;
        v_hi += 1.0;
    }
    Frame f{c_lo, c_hi, v_lo, v_hi};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"720\" viewBox=\"0 0 760 720\">\n";
    os << "<rect width=\"760\" height=\"720\" fill=\"#ffffff\"/>\n";
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};
    std::string control = branches.empty() ? "control" : std::string(continuation::to_string(branches[0].control));
    for (std::size_t b = 0; b < branches.size(); ++b) {
        if (branches[b].states.size() < 2) continue;
        os << "<polyline fill=\"none\" stroke=\"" << palette[b % 7] << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < branches[b].states.size(); ++k) {
            const auto& s = branches[b].states[k];
            os << (k ? " " : "") << f3(f.px(s.control)) << ',' << f3(f.py(s.params.theta()[component]));
        }
        os << "\"/>\n";
    }
    for (const auto& fp : folds) {
        os << "<circle cx=\"" << f3(f.px(fp.control)) << "\" cy=\"" << f3(f.py(fp.params.theta()[component]))
           << "\" r=\"4\" fill=\"#0000ff\"/>\n";
    }
    axes(os, f, control, names[component]);
    os << "</svg>\n";
    return os.str();
}

} // namespace trajid::io
