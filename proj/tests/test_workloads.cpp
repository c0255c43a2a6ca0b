#include <catch_amalgamated.hpp>

#include "oracles.hpp"

#include <gemmsim/errors.hpp>
#include <gemmsim/streamer.hpp>
#include <gemmsim/workloads.hpp>

#include <fstream>
#include <sstream>

using namespace gemmsim;

namespace {

const ValidatedConfig& cs() {
    static const ValidatedConfig cfg = validate(case_study_config());
    return cfg;
}

std::string fixture(const std::string& name) { return std::string(GEMMSIM_FIXTURES) + "/" + name; }

}  // namespace

TEST_CASE("im2col dimensions", "[workloads]") {
    CHECK(im2col_dims({56, 56, 3, 3, 64, 64}) == GemmDims{3136, 576, 64});
    CHECK(im2col_dims({1, 1, 1, 1, 1, 1}) == GemmDims{1, 1, 1});
    CHECK_THROWS_AS(im2col_dims({0, 1, 1, 1, 1, 1}), ShapeMismatchError);
}

TEST_CASE("random suite matches the reference generator", "[workloads]") {
    std::ifstream in(fixture("random_suite_seed42.txt"));
    REQUIRE(in);
    std::string line;
    std::vector<GemmDims> want;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        GemmDims d;
        ss >> d.m >> d.k >> d.n;
        want.push_back(d);
    }
    const auto suite = random_suite(42, want.size());
    REQUIRE(suite.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(suite[i].dims == want[i]);
        CHECK(suite[i].workload == i);
    }
}

TEST_CASE("random suite stays on the 8..256 grid", "[workloads]") {
    const auto suite = random_suite(7, 2000, Layout::contiguous);
    std::vector<int> hits(33, 0);
    for (const auto& j : suite) {
        for (std::uint32_t v : {j.dims.m, j.dims.k, j.dims.n}) {
            REQUIRE(v % 8 == 0);
            REQUIRE(v >= 8);
            REQUIRE(v <= 256);
            ++hits[v / 8];
        }
        REQUIRE(j.layout == Layout::contiguous);
    }
    for (int v = 1; v <= 32; ++v) CHECK(hits[v] > 0);
    CHECK(random_suite(7, 10)[3].dims == suite[3].dims);
}

TEST_CASE("random operands fit their precision", "[workloads]") {
    std::mt19937_64 rng(3);
    const auto m = random_operand(rng, 20, 20, 4);
    std::int32_t lo = 0, hi = 0;
    for (auto v : m.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo == -8);
    CHECK(hi == 7);
}

TEST_CASE("auto-tiling covers the output exactly once", "[workloads]") {
    GemmJob big;
    big.dims = {3136, 576, 64};
    const auto parts = auto_tile(cs(), big);
    REQUIRE(parts.size() > 1);
    std::vector<int> cover(std::size_t{3136} * 64, 0);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const GemmJob& p = parts[i];
        CHECK(p.part == i);
        CHECK(p.dims.k == 576);
        for (Layout l : {Layout::contiguous, Layout::interleaved}) {
            const OperandPlan plan = plan_layout(cs(), p.dims, l);
            REQUIRE(fits_spm(cs(), plan));
            REQUIRE(plan.program.m2 <= 1023);
            REQUIRE(plan.program.n2 <= 1023);
        }
        for (std::uint32_t r = 0; r < p.dims.m; ++r)
            for (std::uint32_t c = 0; c < p.dims.n; ++c) ++cover[(p.m_offset + r) * 64 + p.n_offset + c];
    }
    for (int c : cover) REQUIRE(c == 1);
    CHECK(total_macs(parts) == big.dims.macs());
}

TEST_CASE("jobs that already fit are not split", "[workloads]") {
    GemmJob j;
    j.dims = {128, 256, 128};
    j.workload = 9;
    const auto parts = auto_tile(cs(), j);
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].dims == j.dims);
    CHECK(parts[0].workload == 9);
}

TEST_CASE("a K too long for one output tile is a capacity error", "[workloads]") {
    GemmJob j;
    j.dims = {8, 1u << 20, 8};
    CHECK_THROWS_AS(auto_tile(cs(), j), CapacityError);
}

TEST_CASE("sliced sub-jobs reassemble the product", "[workloads]") {
    std::mt19937 rng(29);
    GemmJob j;
    j.dims = {700, 300, 90};
    const auto a = oracle::random_int8(rng, 700, 300);
    const auto b = oracle::random_int8(rng, 300, 90);
    const auto parts = auto_tile(cs(), j);
    REQUIRE(parts.size() > 1);
    const auto inputs = slice_operands(parts, a, b);
    ResultMatrix c(700, 90);
    for (const auto& in : inputs) place_result(c, in.job, oracle::gemm(in.a, in.b));
    CHECK(c == oracle::gemm(a, b));
}

TEST_CASE("model spec parsing", "[workloads]") {
    const auto layers = parse_model_spec(
        "# header\n"
        "conv name=c1 ox=4 oy=4 fx=3 fy=3 c=2 kout=5 repeat=2\n"
        "\n"
        "dwconv ox=7 oy=7 fx=3 fy=3 c=32  # trailing comment\n"
        "linear m=1 k=512 n=100\n"
        "matmul m=128 k=64 n=128 repeat=12\n");
    REQUIRE(layers.size() == 4);
    CHECK(layers[0].kind == LayerKind::conv);
    CHECK(layers[0].name == "c1");
    CHECK(layers[0].dims == GemmDims{16, 18, 5});
    CHECK(layers[0].repeat == 2);
    CHECK(layers[0].line == 2);
    CHECK(layers[1].dims == GemmDims{49, 9, 1});
    CHECK(layers[1].gemms == 32);
    CHECK(layers[1].macs() == 49ull * 9 * 32);
    CHECK(layers[3].macs() == 128ull * 64 * 128 * 12);

    const auto jobs = expand_layers(cs(), layers);
    std::uint64_t macs = 0;
    for (const auto& l : layers) macs += l.macs();
    CHECK(total_macs(jobs) == macs);
    CHECK(jobs.size() == 2 + 32 + 1 + 12);
}

TEST_CASE("model spec errors carry line and field", "[workloads]") {
    auto expect = [](const std::string& text, std::size_t line, const std::string& field) {
        try {
            parse_model_spec(text, "t.layers");
            FAIL("expected ParseError for: " << text);
        } catch (const ParseError& e) {
            CHECK(e.line() == line);
            CHECK(e.field() == field);
        }
    };
    expect("pool ox=1\n", 1, "pool");
    expect("\nlinear m=1 k=2\n", 2, "n");
    expect("linear m=1 k=2 n=3 q=4\n", 1, "q");
    expect("linear m=1 k=2 n=3 m=4\n", 1, "m");
    expect("linear m=0 k=2 n=3\n", 1, "m");
    expect("linear m=x k=2 n=3\n", 1, "m");
    expect("linear m\n", 1, "m");
}

TEST_CASE("fixtures", "[workloads]") {
    SECTION("single conv") {
        const auto layers = read_model_spec(fixture("single_conv.layers"));
        REQUIRE(layers.size() == 1);
        CHECK(layers[0].dims == GemmDims{3136, 576, 64});
    }
    SECTION("empty file") {
        CHECK(read_model_spec(fixture("empty.layers")).empty());
        CHECK(load_model_spec(fixture("empty.layers"), cs()).empty());
    }
    SECTION("missing file") { CHECK_THROWS_AS(read_model_spec(fixture("nope.layers")), Error); }
}

TEST_CASE("bundled BERT-base MAC count", "[workloads]") {
    std::ifstream in(fixture("bert_base_macs.csv"));
    REQUIRE(in);
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    REQUIRE(last.rfind("total,", 0) == 0);
    const std::uint64_t want = std::stoull(last.substr(last.rfind(',') + 1));

    const auto layers = read_model_spec(std::string(GEMMSIM_DATA_DIR) + "/models/bert_base.layers");
    std::uint64_t macs = 0;
    for (const auto& l : layers) macs += l.macs();
    CHECK(macs == want);
    CHECK(total_macs(expand_layers(cs(), layers)) == want);
}

TEST_CASE("every bundled model parses and tiles", "[workloads]") {
    for (const char* name : {"resnet18", "mobilenet_v2", "vit_b16", "bert_base"}) {
        const auto jobs = load_model_spec(std::string(GEMMSIM_DATA_DIR) + "/models/" + name + ".layers", cs());
        CHECK_FALSE(jobs.empty());
        for (const auto& j : jobs) REQUIRE(fits_spm(cs(), plan_layout(cs(), j.dims, j.layout)));
    }
}
