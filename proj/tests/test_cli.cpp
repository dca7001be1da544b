#include "doctest.h"

#include "cli.hpp"
#include "trajid/error.hpp"
#include "trajid/io.hpp"

#include <filesystem>
#include <sstream>

using namespace trajid;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("trajid_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    [[nodiscard]] std::string str() const { return path.string(); }
    [[nodiscard]] std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int code = cli::main_entry(args, out, err);
    if (err_text) *err_text = err.str();
    return code;
}

} // namespace

TEST_CASE("configuration errors exit with 1") {
    CHECK(run({"no-such-command"}) == 1);
    CHECK(run({"lv-invert", "--p2", "1"}) == 1);
    CHECK(run({"diagram", "--nx", "0"}) == 1);
    CHECK(run({"lv-invert", "--family", "cubic"}) == 1);
    CHECK_THROWS_AS(cli::parse_args({"slice", "--fixed", "z2"}), Error);
}

TEST_CASE("help prints and exits with 0") {
    std::string help;
    const auto c = cli::parse_args({"--help"}, &help);
    CHECK(c.command.empty());
    CHECK(help.find("lv-invert") != std::string::npos);
}

TEST_CASE("collinear linear data exits with 2 and an error record") {
    TempDir dir("collinear");
    CHECK(run({"linear-invert", "--points", "0,1,1;1,2,2;2,3,3", "-o", dir.str()}) == 2);
    const std::string text = io::read_file(dir.file("linear.json"));
    CHECK(text.find("LinearlyDependentData") != std::string::npos);
}

TEST_CASE("linear and affine inversion from CSV") {
    TempDir dir("linear");
    io::write_file(dir.file("data.csv"), "t,x,y\n0,1,1\n1,2,3\n2,4,9\n");
    CHECK(run({"linear-invert", "--csv", dir.file("data.csv"), "-o", dir.str()}) == 0);
    CHECK(io::read_file(dir.file("linear.json")).find("solutions") != std::string::npos);
    CHECK(run({"affine-invert", "--points", "0,0,0;1,0.63212055882855767,0.8646647167633873;"
                                           "2,0.8646647167633873,0.98168436111126578;"
                                           "3,0.95021293163213605,0.99752124782333362",
               "-o", dir.str()}) == 0);
    CHECK(fs::exists(dir.file("affine.json")));
}

TEST_CASE("lv-invert reproduces the predator-prey solution, byte-identically") {
    TempDir a("lv_a"), b("lv_b");
    REQUIRE(run({"lv-invert", "--p2", "2.45,4", "-o", a.str()}) == 0);
    REQUIRE(run({"lv-invert", "--p2", "2.45,4", "-o", b.str()}) == 0);
    const std::string text = io::read_file(a.file("solutions.json"));
    CHECK(text == io::read_file(b.file("solutions.json")));
    const auto loaded = io::parse_lv_solutions_json(text);
    bool canonical_pp = false;
    for (const auto& s : loaded.solutions) {
        CHECK(shooting::verify_residual(loaded.problem, s.theta()) <= 1e-8);
        canonical_pp = canonical_pp || (s.canonical && s.signature.str() == "+-+-");
    }
    CHECK(canonical_pp);
}

TEST_CASE("small diagram and SVG re-rendering") {
    TempDir dir("diagram");
    REQUIRE(run({"diagram", "--nx", "6", "--ny", "6", "--curves", "C_beta1,C_beta2", "--no-refine",
                 "--no-fold-seeding", "--anchor-stride", "3", "-o", dir.str()}) <= 2);
    CHECK(fs::exists(dir.file("diagram.json")));
    CHECK(fs::exists(dir.file("diagram.svg")));
    CHECK(fs::exists(dir.file("curves/C_beta1.csv")));
    const std::string svg = io::read_file(dir.file("diagram.svg"));
    fs::rename(dir.file("diagram.svg"), dir.file("first.svg"));
    CHECK(run({"emit-svg", "-i", dir.file("diagram.json"), "-o", dir.str()}) == 0);
    CHECK(io::read_file(dir.file("diagram.svg")) == svg);
}
