#include <catch_amalgamated.hpp>

#include "oracles.hpp"

#include <gemmsim/errors.hpp>
#include <gemmsim/sim_engine.hpp>

#include <random>

using namespace gemmsim;

namespace {

const ValidatedConfig& cs() {
    static const ValidatedConfig cfg = validate(case_study_config());
    return cfg;
}

GemmJob job(std::uint32_t m, std::uint32_t k, std::uint32_t n, Layout layout = Layout::interleaved) {
    GemmJob j;
    j.dims = {m, k, n};
    j.layout = layout;
    return j;
}

SimReport run_one(GemmDims d, const MechanismFlags& flags, Layout layout = Layout::interleaved, SimOptions opt = {}) {
    const std::vector<GemmJob> jobs{job(d.m, d.k, d.n, layout)};
    return simulate_timing(cs(), jobs, flags, opt);
}

void check_accounting(const SimReport& r) {
    REQUIRE(r.cycles.total() == r.total_cycles);
    CycleBreakdown sum;
    for (const auto& j : r.jobs) sum += j.cycles;
    REQUIRE(sum == r.cycles);
    REQUIRE(r.cycles.compute == r.ideal_cycles);
    REQUIRE(r.ou == r.su * r.tu);
}

}  // namespace

TEST_CASE("spatial utilization", "[sim_engine]") {
    CHECK(spatial_utilization(cs(), {12, 12, 12}) == 0.421875);
    CHECK(spatial_utilization(cs(), {12, 12, 12}) == oracle::spatial(12, 12, 12, 8, 8, 8));
    CHECK(spatial_utilization(cs(), {64, 8, 256}) == 1.0);
    CHECK(spatial_utilization(cs(), {1, 1, 1}) == 1.0 / 512.0);
}

TEST_CASE("utilization identities", "[sim_engine]") {
    const Utilization u = utilization(27, 64, 3, 4);
    CHECK(u.su == 27.0 / 64.0);
    CHECK(u.tu == 0.75);
    CHECK(u.ou == u.su * u.tu);
    const Utilization z = utilization(0, 0, 0, 0);
    CHECK(z.ou == 0.0);
}

TEST_CASE("single aligned job timeline", "[sim_engine]") {
    // 9 configuration writes, one cycle to fill the first operand pair,
    // 64 compute cycles, one cycle to write the last C tile.
    const SimReport r = run_one({32, 32, 32}, MechanismFlags::arch(4));
    check_accounting(r);
    CHECK(r.total_cycles == 9 + 1 + 64 + 1);
    CHECK(r.cycles.config == 9);
    CHECK(r.cycles.compute == 64);
    CHECK(r.conflict_count == 0);
    CHECK(r.jobs.at(0).start_cycle == 9);
    CHECK(r.jobs.at(0).end_cycle == 74);
    CHECK(r.tu == 64.0 / 75.0);
    CHECK(r.ops_per_compute_cycle == 1024.0);
    CHECK_THAT(r.steady_state_gops, Catch::Matchers::WithinAbs(204.8, 1e-9));
    CHECK(r.ops_executed == 2ull * 32 * 32 * 32);
}

TEST_CASE("CPL hides configuration of the next job", "[sim_engine]") {
    const std::vector<GemmJob> two{job(32, 32, 32), job(32, 32, 32)};
    MechanismFlags on = MechanismFlags::arch(4);
    MechanismFlags off = on;
    off.cpl = false;

    const SimReport with = simulate_timing(cs(), two, on);
    const SimReport without = simulate_timing(cs(), two, off);
    check_accounting(with);
    check_accounting(without);
    // Second job: commit one cycle after the last writeback, start the next.
    CHECK(with.jobs[1].start_cycle == with.jobs[0].end_cycle + 2);
    CHECK(with.total_cycles == 75 + 1 + 1 + 64 + 1);
    // Without CPL all nine writes follow the previous job.
    CHECK(without.jobs[1].start_cycle == without.jobs[0].end_cycle + 10);
    CHECK(without.total_cycles == 75 + 9 + 1 + 64 + 1);
}

TEST_CASE("extra CSR writes lengthen configuration", "[sim_engine]") {
    SimOptions opt;
    opt.extra_csr_writes = 6;
    const SimReport r = run_one({16, 16, 16}, MechanismFlags::arch(4), Layout::interleaved, opt);
    CHECK(r.cycles.config == 15);
    CHECK(r.jobs[0].csr_writes == 15);
}

TEST_CASE("on-demand streaming halves the compute rate", "[sim_engine]") {
    const SimReport r = run_one({32, 256, 32}, MechanismFlags::arch(1));
    check_accounting(r);
    const std::uint64_t steps = 4 * 32 * 4;
    CHECK(r.cycles.compute == steps);
    CHECK(r.cycles.input_stall >= steps - 1);
    CHECK(r.tu < 0.55);
}

TEST_CASE("bank conflicts depend on the layout", "[sim_engine]") {
    const SimReport contiguous = run_one({16, 16, 16}, MechanismFlags::arch(3), Layout::contiguous);
    const SimReport interleaved = run_one({16, 16, 16}, MechanismFlags::arch(4), Layout::interleaved);
    CHECK(contiguous.conflict_count > 0);
    CHECK(interleaved.conflict_count == 0);
    CHECK(interleaved.total_cycles < contiguous.total_cycles);
    CHECK(contiguous.jobs[0].layout == Layout::contiguous);
    CHECK(interleaved.jobs[0].layout == Layout::interleaved);

    // strided_layout off forces contiguous placement regardless of the job.
    const SimReport forced = run_one({16, 16, 16}, MechanismFlags::arch(3), Layout::interleaved);
    CHECK(forced.jobs[0].layout == Layout::contiguous);
}

TEST_CASE("functional results match the oracle under every mechanism", "[sim_engine]") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> d(1, 48);
    for (int combo = 0; combo < 16; ++combo) {
        MechanismFlags f;
        f.cpl = combo & 1;
        f.prefetch_buffering = combo & 2;
        f.strided_layout = combo & 4;
        f.buffer_depth = (combo & 8) ? 3 : 2;
        std::vector<JobInput> jobs;
        for (int i = 0; i < 4; ++i) {
            JobInput in;
            in.job.dims = {static_cast<std::uint32_t>(d(rng)), static_cast<std::uint32_t>(d(rng)),
                           static_cast<std::uint32_t>(d(rng))};
            in.job.layout = i % 2 ? Layout::interleaved : Layout::contiguous;
            in.job.order = i % 3 ? LoopOrder::mnk : LoopOrder::nmk;
            in.a = oracle::random_int8(rng, in.job.dims.m, in.job.dims.k);
            in.b = oracle::random_int8(rng, in.job.dims.k, in.job.dims.n);
            jobs.push_back(std::move(in));
        }
        const SimReport r = simulate(cs(), jobs, f);
        check_accounting(r);
        for (std::size_t i = 0; i < jobs.size(); ++i) REQUIRE(r.jobs[i].result == oracle::gemm(jobs[i].a, jobs[i].b));
    }
}

TEST_CASE("single-ported banks stay correct", "[sim_engine]") {
    std::mt19937 rng(19);
    JobInput in;
    in.job.dims = {24, 40, 24};
    in.a = oracle::random_int8(rng, 24, 40);
    in.b = oracle::random_int8(rng, 40, 24);
    SimOptions opt;
    opt.porting = BankPorting::single;
    const std::vector<JobInput> jobs{in};
    const SimReport r = simulate(cs(), jobs, MechanismFlags::arch(4), opt);
    check_accounting(r);
    CHECK(r.jobs[0].result == oracle::gemm(in.a, in.b));
}

TEST_CASE("timing-only runs report the same cycles", "[sim_engine]") {
    std::mt19937 rng(23);
    JobInput in;
    in.job.dims = {40, 24, 56};
    in.a = oracle::random_int8(rng, 40, 24);
    in.b = oracle::random_int8(rng, 24, 56);
    const std::vector<JobInput> jobs{in};
    for (int v = 1; v <= 4; ++v) {
        const SimReport full = simulate(cs(), jobs, MechanismFlags::arch(v));
        const SimReport fast = run_one(in.job.dims, MechanismFlags::arch(v));
        CHECK(full.total_cycles == fast.total_cycles);
        CHECK(full.cycles == fast.cycles);
        CHECK(fast.jobs[0].result.rows() == 0);
    }
}

TEST_CASE("emits land on every k-wrap", "[sim_engine]") {
    SimOptions opt;
    opt.record_emits = true;
    const SimReport r = run_one({24, 40, 16}, MechanismFlags::arch(3), Layout::contiguous, opt);
    const auto& e = r.jobs[0].emits;
    REQUIRE(e.size() == 3 * 2);
    for (std::size_t i = 0; i < e.size(); ++i) CHECK(e[i] == (i + 1) * 5);
}

TEST_CASE("deeper buffers never hurt", "[sim_engine]") {
    for (GemmDims d : {GemmDims{64, 64, 64}, GemmDims{8, 256, 128}, GemmDims{100, 30, 70}}) {
        const double d2 = run_one(d, MechanismFlags::arch(4, 2)).ou;
        const double d3 = run_one(d, MechanismFlags::arch(4, 3)).ou;
        const double d4 = run_one(d, MechanismFlags::arch(4, 4)).ou;
        CHECK(d3 >= d2);
        CHECK(d4 >= d3);
    }
}

TEST_CASE("metrics are recomputed from a report", "[sim_engine]") {
    const SimReport r = run_one({20, 30, 40}, MechanismFlags::arch(2));
    const Utilization u = metrics(r);
    CHECK(u.su == r.su);
    CHECK(u.tu == r.tu);
    CHECK(u.ou == r.ou);
    CHECK(r.su == oracle::spatial(20, 30, 40, 8, 8, 8));
}

TEST_CASE("jobs that do not fit the scratchpad are rejected", "[sim_engine]") {
    CHECK_THROWS_AS(run_one({1000, 1000, 1000}, MechanismFlags::arch(4)), CapacityError);
    CHECK(simulate_timing(cs(), std::span<const GemmJob>{}, MechanismFlags::arch(4)).total_cycles == 0);
}
