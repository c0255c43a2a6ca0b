#include <catch_amalgamated.hpp>

#include "oracles.hpp"

#include <gemmsim/errors.hpp>
#include <gemmsim/streamer.hpp>

#include <random>
#include <set>

using namespace gemmsim;

namespace {

const ValidatedConfig& cs() {
    static const ValidatedConfig cfg = validate(case_study_config());
    return cfg;
}

std::vector<std::uint64_t> burst_at(const StreamDescriptor& d, const AguCounters& c) {
    AguCounters copy = c;
    std::vector<std::uint64_t> out;
    agu_next(d, copy, 8, cs().capacity_bytes(), out);
    return out;
}

std::set<std::uint32_t> banks_of(const std::vector<std::uint64_t>& addrs) {
    std::set<std::uint32_t> s;
    for (auto a : addrs) s.insert(static_cast<std::uint32_t>((a / 8) % 32));
    return s;
}

}  // namespace

TEST_CASE("contiguous layout strides", "[streamer]") {
    const OperandPlan plan = plan_layout(cs(), {16, 16, 16}, Layout::contiguous);
    const StreamProgram& p = plan.program;
    // 8-byte A and B rows, 32-byte C rows, two tiles along every dimension.
    CHECK(p.a_base == 0);
    CHECK(p.a_stride_k == 8);
    CHECK(p.a_stride_m == 8 * 2 * 8);
    CHECK(p.a_row_pitch == 16);
    CHECK(p.b_base == 256);
    CHECK(p.b_stride_k == 8 * 2 * 8);
    CHECK(p.b_stride_n == 8);
    CHECK(p.b_row_pitch == 16);
    CHECK(p.c_base == 512);
    CHECK(p.c_stride_n == 32);
    CHECK(p.c_stride_m == 8 * 2 * 32);
    CHECK(p.c_row_pitch == 64);
    CHECK(plan.footprint_bytes == 256 + 256 + 1024);
}

TEST_CASE("interleaved layout keeps A and B in disjoint bank groups", "[streamer]") {
    CHECK(interleaving_supported(cs()));
    const OperandPlan plan = plan_layout(cs(), {24, 40, 16}, Layout::interleaved);
    REQUIRE(plan.layout == Layout::interleaved);
    const StreamProgram& p = plan.program;
    CHECK(p.a_stride_k == 128);
    CHECK(p.b_base == 64);
    CHECK(a_tile_address(p, 1, 2) == 128 * (1 * 5 + 2));
    CHECK(b_tile_address(p, 3, 1) == 64 + 128 * (1 * 5 + 3));
    CHECK(p.c_base == 128 * 15);  // max(3*5, 5*2) tile pairs

    std::mt19937 rng(21);
    std::uniform_int_distribution<std::uint32_t> d(1, 120);
    for (int t = 0; t < 50; ++t) {
        const OperandPlan q = plan_layout(cs(), {d(rng), d(rng), d(rng)}, Layout::interleaved);
        const StreamSet s = describe_streams(cs(), q.program);
        AguCounters ca, cb;
        std::vector<std::uint64_t> ba, bb;
        while (!ca.done) {
            agu_next(s.a, ca, 8, cs().capacity_bytes(), ba);
            agu_next(s.b, cb, 8, cs().capacity_bytes(), bb);
            const auto sa = banks_of(ba), sb = banks_of(bb);
            REQUIRE(sa.size() == 8);
            REQUIRE(sb.size() == 8);
            for (auto bank : sa) REQUIRE(sb.count(bank) == 0);
        }
        REQUIRE(cb.done);
    }
}

TEST_CASE("contiguous layout of the conflict fixture shares banks", "[streamer]") {
    const OperandPlan plan = plan_layout(cs(), {16, 16, 16}, Layout::contiguous);
    const StreamSet s = describe_streams(cs(), plan.program);
    const auto sa = banks_of(burst_at(s.a, {}));
    const auto sb = banks_of(burst_at(s.b, {}));
    std::size_t shared = 0;
    for (auto b : sa) shared += sb.count(b);
    CHECK(shared > 0);
}

TEST_CASE("interleaving falls back when the bank count cannot host two groups", "[streamer]") {
    PlatformConfig c = case_study_config();
    c.n_bank = 40;
    const ValidatedConfig v = validate(c);
    CHECK_FALSE(interleaving_supported(v));
    const OperandPlan plan = plan_layout(v, {16, 16, 16}, Layout::interleaved);
    CHECK(plan.requested == Layout::interleaved);
    CHECK(plan.layout == Layout::contiguous);
}

TEST_CASE("stream descriptors follow the loop order", "[streamer]") {
    const OperandPlan plan = plan_layout(cs(), {16, 24, 32}, Layout::contiguous);
    const StreamSet s = describe_streams(cs(), plan.program);
    CHECK(s.a.loops[0] == StreamLoop{3, plan.program.a_stride_k});
    CHECK(s.a.loops[1] == StreamLoop{4, 0});
    CHECK(s.b.loops[2] == StreamLoop{2, 0});
    CHECK(s.c.loops[0] == StreamLoop{4, plan.program.c_stride_n});
    CHECK(s.a.ports() == 8);
    CHECK(s.b.ports() == 8);
    CHECK(s.c.ports() == 32);
    CHECK(s.a.tiles() == 2 * 3 * 4);
    CHECK(s.c.tiles() == 2 * 4);

    const OperandPlan nmk = plan_layout(cs(), {16, 24, 32}, Layout::contiguous, LoopOrder::nmk);
    const StreamSet t = describe_streams(cs(), nmk.program);
    CHECK(t.a.loops[1] == StreamLoop{2, nmk.program.a_stride_m});
    CHECK(t.b.loops[1] == StreamLoop{2, 0});
    CHECK(t.c.loops[0] == StreamLoop{2, nmk.program.c_stride_m});
}

TEST_CASE("AGU visits tiles innermost-first and stops", "[streamer]") {
    StreamDescriptor d;
    d.base = 64;
    d.loops = {StreamLoop{2, 8}, StreamLoop{3, 0}, StreamLoop{2, 1024}};
    d.rows = 2;
    d.row_words = 1;
    d.row_pitch = 16;
    AguCounters c;
    std::vector<std::uint64_t> burst, bases;
    while (!c.done) {
        bases.push_back(tile_base(d, c));
        agu_next(d, c, 8, cs().capacity_bytes(), burst);
        REQUIRE(burst.size() == 2);
        REQUIRE(burst[1] == burst[0] + 16);
    }
    CHECK(bases.size() == 12);
    CHECK(bases[0] == 64);
    CHECK(bases[1] == 72);
    CHECK(bases[2] == 64);
    CHECK(bases[6] == 64 + 1024);
    CHECK(bases[11] == 64 + 1024 + 8);

    StreamDescriptor far = d;
    far.base = cs().capacity_bytes() - 8;
    AguCounters c2;
    CHECK_THROWS_AS(agu_next(far, c2, 8, cs().capacity_bytes(), burst), OutOfRangeError);
    StreamDescriptor odd = d;
    odd.base = 4;
    AguCounters c3;
    CHECK_THROWS_AS(agu_next(odd, c3, 8, cs().capacity_bytes(), burst), MisalignedError);
}

TEST_CASE("loaded operands are read back tile by tile", "[streamer]") {
    std::mt19937 rng(31);
    const CoreShape shape = CoreShape::from(cs());
    for (Layout layout : {Layout::contiguous, Layout::interleaved}) {
        const auto a = oracle::random_int8(rng, 19, 30);
        const auto b = oracle::random_int8(rng, 30, 12);
        const OperandPlan plan = plan_layout(cs(), {19, 30, 12}, layout);
        std::vector<std::uint8_t> mem(cs().capacity_bytes(), 0xaa);
        load_operands(cs(), plan, a, b, mem);
        const StreamSet s = describe_streams(cs(), plan.program);

        for (std::uint32_t m = 0; m < plan.program.m2; ++m)
            for (std::uint32_t k = 0; k < plan.program.k1; ++k) {
                StreamDescriptor one = s.a;
                one.base = a_tile_address(plan.program, m, k);
                std::vector<std::uint8_t> words;
                for (auto addr : burst_at(one, {})) words.insert(words.end(), mem.begin() + addr, mem.begin() + addr + 8);
                std::vector<std::int32_t> got(64), want(64);
                decode_tile(words, 8, 8, 1, 8, 8, got);
                extract_a_tile(a, m, k, shape, want);
                REQUIRE(got == want);
            }
        for (std::uint32_t k = 0; k < plan.program.k1; ++k)
            for (std::uint32_t n = 0; n < plan.program.n2; ++n) {
                StreamDescriptor one = s.b;
                one.base = b_tile_address(plan.program, k, n);
                std::vector<std::uint8_t> words;
                for (auto addr : burst_at(one, {})) words.insert(words.end(), mem.begin() + addr, mem.begin() + addr + 8);
                std::vector<std::int32_t> got(64), want(64);
                decode_tile(words, 8, 8, 1, 8, 8, got);
                extract_b_tile(b, k, n, shape, want);
                REQUIRE(got == want);
            }
    }
}

TEST_CASE("result tiles written through the C ports read back unpadded", "[streamer]") {
    std::mt19937 rng(41);
    const auto a = oracle::random_int8(rng, 13, 9);
    const auto b = oracle::random_int8(rng, 9, 20);
    const ResultMatrix c = oracle::gemm(a, b);
    for (Layout layout : {Layout::contiguous, Layout::interleaved}) {
        const OperandPlan plan = plan_layout(cs(), {13, 9, 20}, layout);
        std::vector<std::uint8_t> mem(cs().capacity_bytes(), 0);
        const StreamSet s = describe_streams(cs(), plan.program);
        for (std::uint32_t m = 0; m < plan.program.m2; ++m)
            for (std::uint32_t n = 0; n < plan.program.n2; ++n) {
                std::vector<std::int64_t> tile(64, 0);
                for (std::uint32_t i = 0; i < 8; ++i)
                    for (std::uint32_t j = 0; j < 8; ++j)
                        if (m * 8 + i < 13 && n * 8 + j < 20) tile[i * 8 + j] = c(m * 8 + i, n * 8 + j);
                std::vector<std::uint8_t> words(256);
                encode_tile(tile, 8, 8, 4, 8, 32, words);
                StreamDescriptor one = s.c;
                one.base = c_tile_address(plan.program, m, n);
                const auto addrs = burst_at(one, {});
                for (std::size_t p = 0; p < addrs.size(); ++p)
                    std::copy(words.begin() + p * 8, words.begin() + p * 8 + 8, mem.begin() + addrs[p]);
            }
        CHECK(read_result(cs(), plan, mem) == c);
    }
}

TEST_CASE("capacity check", "[streamer]") {
    // 128 x 256 x 128: 8192 words of A'/B' pairs plus 8192 words of C.
    CHECK(fits_spm(cs(), plan_layout(cs(), {128, 256, 128}, Layout::interleaved)));
    // 256^3 needs 32768 words for the 32-bit C alone.
    CHECK_FALSE(fits_spm(cs(), plan_layout(cs(), {256, 256, 256}, Layout::interleaved)));
    CHECK_FALSE(fits_spm(cs(), plan_layout(cs(), {1024, 1024, 1024}, Layout::contiguous)));
}

TEST_CASE("prefetch FIFO", "[streamer]") {
    PrefetchFifo f(2, 64);
    CHECK(f.can_reserve());
    f.reserve()[0] = 7;
    CHECK_FALSE(f.can_reserve());  // one fetch in flight at a time
    f.commit(5);
    CHECK_FALSE(f.head_ready(4));
    CHECK(f.head_ready(5));
    CHECK(f.head()[0] == 7);
    f.reserve();
    f.commit(6);
    CHECK(f.full());
    CHECK_THROWS_AS(f.reserve(), SimulationError);
    f.pop();
    f.pop();
    CHECK_THROWS_AS(f.pop(), SimulationError);
    CHECK_THROWS_AS(PrefetchFifo(0, 8), ZeroParamError);
}

TEST_CASE("output buffers drain in fill order", "[streamer]") {
    OutputBuffers o(2, 16);
    o.fill(3)[0] = 1;
    o.fill(4)[0] = 2;
    CHECK_FALSE(o.can_fill());
    CHECK_FALSE(o.drain_ready(3));
    CHECK(o.drain_ready(4));
    o.begin_drain();
    CHECK(o.drain_bytes()[0] == 1);
    o.release();
    CHECK(o.can_fill());
    CHECK(o.busy_slots() == 1);
    CHECK_THROWS_AS(o.release(), SimulationError);
}

TEST_CASE("input streamer fetches one tile per cycle without conflicts", "[streamer]") {
    Spm spm(cs());
    const OperandPlan plan = plan_layout(cs(), {8, 32, 8}, Layout::interleaved);
    const StreamSet s = describe_streams(cs(), plan.program);

    SECTION("prefetch mode fills the FIFO up to its depth") {
        InputStreamer in(s.a, 3, spm, 0, false, false);
        for (std::uint64_t cyc = 0; cyc < 3; ++cyc) {
            const StreamEvents ev = in.prefetch_tick(spm, cyc);
            CHECK(ev.tile_completed);
            CHECK(ev.stalled == 0);
        }
        CHECK(in.fifo().full());
        CHECK(in.fifo().head_ready(1));
        CHECK_FALSE(in.prefetch_tick(spm, 3).tile_started);
        in.fifo().pop();
        CHECK(in.prefetch_tick(spm, 4).tile_completed);
        CHECK(in.exhausted());
        CHECK(in.tiles_fetched() == 4);
    }
    SECTION("on-demand mode waits for a credit") {
        InputStreamer in(s.a, 1, spm, 0, true, false);
        CHECK_FALSE(in.prefetch_tick(spm, 0).tile_started);
        in.add_credit();
        CHECK(in.prefetch_tick(spm, 1).tile_completed);
        CHECK(in.fifo().occupancy() == 1);
    }
    SECTION("functional mode copies the granted words") {
        spm.bytes()[0] = 42;
        InputStreamer in(s.a, 1, spm, 0, false, true);
        in.prefetch_tick(spm, 0);
        CHECK(in.fifo().head()[0] == 42);
    }
}

TEST_CASE("output writer drains a C tile", "[streamer]") {
    Spm spm(cs());
    const OperandPlan plan = plan_layout(cs(), {8, 8, 8}, Layout::interleaved);
    const StreamSet s = describe_streams(cs(), plan.program);
    OutputWriter w(s.c, 2, spm, true);
    auto slot = w.buffers().fill(0);
    std::fill(slot.begin(), slot.end(), std::uint8_t{0x5c});
    CHECK_FALSE(w.writeback_tick(spm, 0).tile_started);  // filled this cycle
    const StreamEvents ev = w.writeback_tick(spm, 1);
    CHECK(ev.granted == 32);
    CHECK(ev.tile_completed);
    CHECK(w.idle());
    CHECK(w.tiles_written() == 1);
    CHECK(spm.read_word(plan.program.c_base)[0] == 0x5c);
}
