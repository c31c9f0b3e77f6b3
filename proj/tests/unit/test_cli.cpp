#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hill4bp/cli.hpp"

using namespace hill4bp;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string &name)
{
    const auto p = fs::temp_directory_path() / ("hill4bp_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("equilibria command and its manifest")
{
    const auto dir = scratch("eq");
    const auto r = run({"equilibria", "--mu", "0.00095", "--sweep", "20", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto j = io::json::parse(r.out);
    CHECK(j["points"][0]["label"] == "L1");
    CHECK(j["points"][0]["jacobi"].get<double>() == doctest::Approx(4.325722).epsilon(1e-6));
    const auto m = io::json::parse(slurp(dir / "equilibria.manifest.json"));
    CHECK(m["command"] == "equilibria");
    CHECK(m["parameters"]["mu"] == 0.00095);
    CHECK(m["outputs"].size() == 2);
    for (const auto &f : m["outputs"]) {
        CHECK(fs::exists(dir / f.get<std::string>()));
    }
    const auto csv = slurp(dir / "stability_sweep.csv");
    CHECK(csv.rfind("mu,A,B,D,kind\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
}

TEST_CASE("mu-critical surfaces the discrepancy as a warning")
{
    const auto dir = scratch("mu0");
    const auto r = run({"mu-critical", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto j = io::json::parse(r.out);
    CHECK(j["paper_value"] == 0.00898964);
    CHECK(j["discrepancy_flag"] == true);
    const auto m = io::json::parse(slurp(dir / "mu-critical.manifest.json"));
    REQUIRE(m["warnings"].size() >= 1);
    CHECK(m["warnings"][0].get<std::string>().find("discrepancy") != std::string::npos);
}

TEST_CASE("exit codes")
{
    const auto dir = scratch("codes");
    CHECK(run({"equilibria", "--mu", "0.1", "--bogus", "--out", dir.string()}).code == cli::kExitUsage);
    CHECK(run({"nonsense"}).code == cli::kExitUsage);
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"equilibria", "--mu", "0.7", "--out", dir.string()}).code == cli::kExitDomain);
    CHECK(run({"lyapunov", "--mu", "0.00095", "--jacobi", "4.4", "--out", dir.string()}).code == cli::kExitDomain);
    CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("config file values yield to flags")
{
    const auto dir = scratch("cfg");
    fs::create_directories(dir);
    {
        std::ofstream c(dir / "run.cfg");
        c << "# sweep settings\nmu = 0.3\nsweep_point = L1\nsweep=5\n";
    }
    const auto r = run({"equilibria", "--config", (dir / "run.cfg").string(), "--mu", "0.2", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto m = io::json::parse(slurp(dir / "equilibria.manifest.json"));
    CHECK(m["parameters"]["mu"] == 0.2);
    CHECK(m["parameters"]["sweep"] == 5);
    CHECK(m["parameters"]["sweep_point"] == "L1");

    {
        std::ofstream c(dir / "bad.cfg");
        c << "unknown_key = 1\n";
    }
    CHECK(run({"equilibria", "--config", (dir / "bad.cfg").string(), "--mu", "0.2"}).code == cli::kExitUsage);
    CHECK(run({"equilibria", "--config", (dir / "missing.cfg").string(), "--mu", "0.2"}).code == cli::kExitUsage);
}

TEST_CASE("CSV bodies are reproducible")
{
    const auto a = scratch("rep_a"), b = scratch("rep_b");
    for (const auto &dir : {a, b}) {
        REQUIRE(run({"poincare", "--mu", "0.1", "--jacobi", "4.25334", "--grid", "4", "--iters", "20", "--threads",
                     dir == a ? "1" : "3", "--out", dir.string()})
                    .code == 0);
    }
    const auto csv = slurp(a / "poincare.csv");
    CHECK(csv == slurp(b / "poincare.csv"));
    CHECK(csv.rfind("seed_id,iter,X,PX\n", 0) == 0);
    // 17 significant digits.
    CHECK(csv.find("0.59999999999999998") != std::string::npos);
    const auto m = io::json::parse(slurp(a / "poincare.manifest.json"));
    CHECK(m["parameters"]["threads"] == 1);
}

TEST_CASE("convergence command")
{
    const auto dir = scratch("conv");
    const auto r = run({"convergence", "--lattice", "9", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto j = io::json::parse(r.out);
    CHECK(j["slope"].get<double>() == doctest::Approx(1.0 / 3.0).epsilon(0.05));
    CHECK(slurp(dir / "convergence.csv").rfind("m3,sup_error\n", 0) == 0);
}
