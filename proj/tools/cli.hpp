#pragma once

// Command-line front end. parse_args turns argv into a RunConfig (throwing
// ConfigError on bad input); run executes it and returns the exit status:
// 0 success, 1 configuration or I/O error, 2 solver failures (recorded in
// the written artifacts).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace trajid::cli {

struct RunConfig {
    std::string command;
    std::string out_dir = ".";

    // Data for linear-invert / affine-invert: inline "t,x,y;t,x,y;..." or a
    // CSV file with rows t,x1,...,xn.
    std::string points;
    std::string csv;
    int max_winding = 2;

    // Lotka-Volterra problems.
    std::vector<double> p0{1.0, 1.0};
    std::vector<double> p1{2.0, 1.5};
    std::vector<double> p2{2.45, 4.0};
    std::vector<double> times{0.0, 1.0, 2.0};
    std::string family = "plain";
    double family_param = 0.0;
    bool lattice = true;

    // Diagram grid and curves.
    int nx = 80, ny = 80;
    std::vector<double> x_range{0.1, 10.0};
    std::vector<double> y_range{0.1, 10.0};
    std::vector<std::string> curves;
    int anchor_stride = 10;
    bool refine = true;
    bool fold_seeding = true;
    int refine_budget = 200;
    int workers = 1;
    double blowup = 1e6;

    // Slices and continuation.
    std::string fixed = "x2";
    double value = 4.5;
    std::vector<double> probes;
    std::string curve;
    std::vector<int> rotations{-4, -3, -2, -1, 0, 1, 2};
    std::vector<double> p_values{-0.1, -0.05, 0.0, 0.2};
    std::vector<double> eps_range{0.0, 1.0};
    double integration_tol = 1e-11;
    int max_states = 20000;

    // emit-svg.
    std::string input;
    int component = 1;

    /// Seed for randomized property runs; every solver path is deterministic.
    std::uint64_t seed = 20240601;
    bool verbose = false;
};

/// Throws Error(ConfigError) for unknown commands, bad values or out-of-range
/// overrides. `--help` yields a config with an empty command and the help
/// text in `help`.
RunConfig parse_args(const std::vector<std::string>& args, std::string* help = nullptr);

int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_args + run with error reporting; what main() calls.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace trajid::cli
