#include <catch_amalgamated.hpp>

#include <gemmsim/cli.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gemmsim;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fixture(const std::string& name) { return std::string(GEMMSIM_FIXTURES) + "/" + name; }

bool contains(const std::string& s, const std::string& what) { return s.find(what) != std::string::npos; }

}  // namespace

TEST_CASE("usage errors exit with 2", "[cli]") {
    CHECK(run({}).code == exit_code::usage_error);
    CHECK(run({"frobnicate"}).code == exit_code::usage_error);
    CHECK(run({"simulate", "--m", "0", "--k", "8", "--n", "8"}).code == exit_code::usage_error);
    CHECK(run({"simulate", "--m", "8", "--k", "8", "--n", "8", "--layout", "diagonal"}).code ==
          exit_code::usage_error);
    CHECK(run({"--help"}).code == exit_code::ok);
}

TEST_CASE("validate-config", "[cli]") {
    const Run ok = run({"validate-config"});
    REQUIRE(ok.code == 0);
    CHECK(contains(ok.out, "valid"));
    CHECK(contains(ok.out, "270336 B"));
    CHECK(contains(ok.out, "1024 ops/cycle"));

    const Run bad = run({"validate-config", "--r_mem", "8"});
    CHECK(bad.code == exit_code::usage_error);
    CHECK(contains(bad.err, "read"));

    const Run err = run({"validate-config", "--set", "bogus=1"});
    CHECK(err.code == exit_code::usage_error);

    const Run missing = run({"validate-config", "--config", "/nonexistent/x.cfg"});
    CHECK(missing.code != exit_code::ok);
}

TEST_CASE("simulate with the oracle check", "[cli]") {
    const Run r = run({"simulate", "--m", "32", "--k", "32", "--n", "32", "--oracle-check"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "total_cycles: 75"));
    CHECK(contains(r.out, "functional: PASS"));
    CHECK(contains(r.out, "ops/compute-cycle: 1024"));
    CHECK(contains(r.out, "steady GOPS: 204.8"));
}

TEST_CASE("simulate writes a report", "[cli]") {
    const auto dir = std::filesystem::temp_directory_path() / "gemmsim_test_cli_sim";
    std::filesystem::remove_all(dir);
    const Run r = run({"simulate", "--random", "5", "--seed", "4", "--arch", "3", "--timing-only", "--out",
                       dir.string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(j["seed"] == 4);
    CHECK(j["flags"]["strided_layout"] == false);
    CHECK(j["jobs"].size() == 5);
    const double ou = j["report"]["ou"];
    const double su = j["report"]["su"];
    const double tu = j["report"]["tu"];
    CHECK(ou == su * tu);

    const std::string csv = slurp(dir / "jobs.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    CHECK(csv.rfind("config_hash,seed,job,", 0) == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("bench on fixtures", "[cli]") {
    const Run one = run({"bench", "--model", fixture("single_conv.layers")});
    REQUIRE(one.code == 0);
    CHECK(contains(one.out, "Model"));
    CHECK(contains(one.out, "single_conv"));

    const Run empty = run({"bench", "--model", fixture("empty.layers")});
    REQUIRE(empty.code == 0);
    CHECK(std::count(empty.out.begin(), empty.out.end(), '\n') == 1);  // header only

    const auto dir = std::filesystem::temp_directory_path() / "gemmsim_test_cli_bench";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    {
        std::ofstream bad(dir / "bad.layers");
        bad << "conv ox=1 oy=1\n";
    }
    const Run broken = run({"bench", "--model", (dir / "bad.layers").string()});
    CHECK(broken.code == exit_code::usage_error);
    CHECK(contains(broken.err, "bad.layers:1"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("ablation outputs are byte-identical across runs", "[cli]") {
    const auto base = std::filesystem::temp_directory_path() / "gemmsim_test_cli_abl";
    std::filesystem::remove_all(base);
    const std::vector<std::string> common{"ablation", "--seed", "5", "--n", "6", "--reps", "2"};
    auto a = common, b = common;
    a.insert(a.end(), {"--workers", "1", "--out", (base / "a").string()});
    b.insert(b.end(), {"--workers", "3", "--out", (base / "b").string()});
    const Run ra = run(a);
    const Run rb = run(b);
    REQUIRE(ra.code == 0);
    REQUIRE(rb.code == 0);
    for (const char* f : {"ablation_rows.csv", "ablation_summary.csv", "ablation.json"}) {
        const std::string x = slurp(base / "a" / f);
        CHECK_FALSE(x.empty());
        CHECK(x == slurp(base / "b" / f));
    }
    std::filesystem::remove_all(base);
}
