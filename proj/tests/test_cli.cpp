#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_tool(const std::string& args) {
    const std::string cmd =
        std::string(PDMPFV_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "pdmpfv_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("same configuration and seed produce byte-identical outputs") {
    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    const std::string common = "--model tcp-fj --h 0.2 --T 2 --seed 42 --output-dir ";
    REQUIRE(run_tool(common + a.string()) == 0);
    REQUIRE(run_tool(common + b.string()) == 0);
    for (const char* file : {"density.csv", "sigma_series.csv", "report.txt"}) {
        CHECK(slurp(a / file) == slurp(b / file));
        CHECK(!slurp(a / file).empty());
    }
}

TEST_CASE("different seeds change the Monte-Carlo artifacts only") {
    const fs::path a = fresh_dir("seed_a");
    const fs::path b = fresh_dir("seed_b");
    REQUIRE(run_tool("--model tcp-fj --h 0.2 --T 2 --mc-particles 500 --seed 1 --output-dir " +
                     a.string()) == 0);
    REQUIRE(run_tool("--model tcp-fj --h 0.2 --T 2 --mc-particles 500 --seed 2 --output-dir " +
                     b.string()) == 0);
    CHECK(slurp(a / "density.csv") == slurp(b / "density.csv"));
    CHECK(slurp(a / "mc_histogram.csv") != slurp(b / "mc_histogram.csv"));
}

TEST_CASE("invalid parameters exit nonzero") {
    const fs::path dir = fresh_dir("invalid");
    CHECK(run_tool("--dt -0.5 --output-dir " + dir.string()) != 0);
    CHECK(run_tool("--model no-such-model --output-dir " + dir.string()) != 0);
    CHECK(run_tool("--h 0 --output-dir " + dir.string()) != 0);
    CHECK(run_tool("--p 1.5 --output-dir " + dir.string()) != 0);
}

TEST_CASE("config file values are used and flags override them") {
    const fs::path dir = fresh_dir("config");
    const fs::path cfg = dir / "run.json";
    {
        std::ofstream os(cfg);
        os << R"({
            "model": {"name": "tcp-fj", "X": 2.0, "p": 0.5},
            "mesh": {"h": 0.2},
            "scheme": {"tau": 0.2, "dt": 0.2, "T": 1.0},
            "seed": 7,
            "output": {"dir": ")" << (dir / "from_file").string() << R"("}
        })";
    }
    REQUIRE(run_tool("--config " + cfg.string()) == 0);
    CHECK(slurp(dir / "from_file" / "report.txt").find("T: 1") != std::string::npos);

    REQUIRE(run_tool("--config " + cfg.string() + " --T 2 --output-dir " +
                     (dir / "overridden").string()) == 0);
    const std::string rep = slurp(dir / "overridden" / "report.txt");
    CHECK(rep.find("T: 2") != std::string::npos);
    CHECK(rep.find("h: 0.2") != std::string::npos);

    CHECK(run_tool("--config " + (dir / "missing.json").string()) != 0);
}

TEST_CASE("stationary mode emits the stationary density") {
    const fs::path dir = fresh_dir("stationary");
    REQUIRE(run_tool("--model tcp-fj --h 0.1 --stationary --method direct --seed 3 "
                     "--output-dir " + dir.string()) == 0);
    CHECK(fs::exists(dir / "stationary_density.csv"));
    CHECK(slurp(dir / "report.txt").find("stationary_steps") != std::string::npos);
}

TEST_CASE("coefficient dump and measure export are written on request") {
    const fs::path dir = fresh_dir("dumps");
    REQUIRE(run_tool("--model tcp-fj --h 0.2 --T 1 --seed 5 --dump-coefficients "
                     "--export-mu --output-dir " + dir.string()) == 0);
    for (const char* file : {"v_triplets.txt", "lambda_triplets.txt", "q_triplets.txt",
                             "mu_atoms.csv", "sigma_atoms.csv", "hypotheses.txt"}) {
        CHECK(fs::exists(dir / file));
    }
}
