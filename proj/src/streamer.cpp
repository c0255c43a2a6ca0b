#include <gemmsim/streamer.hpp>

#include <gemmsim/errors.hpp>

#include <algorithm>
#include <cstring>

namespace gemmsim {

const char* to_string(Layout layout) noexcept {
    return layout == Layout::contiguous ? "contiguous" : "interleaved";
}

Layout parse_layout(const std::string& text) {
    if (text == "contiguous") return Layout::contiguous;
    if (text == "interleaved") return Layout::interleaved;
    throw Error("unknown layout '" + text + "' (expected contiguous|interleaved)");
}

std::uint64_t tile_base(const StreamDescriptor& desc, const AguCounters& counters) noexcept {
    std::uint64_t addr = desc.base;
    for (std::size_t l = 0; l < desc.loops.size(); ++l) addr += counters.index[l] * desc.loops[l].stride;
    return addr;
}

void agu_next(const StreamDescriptor& desc, AguCounters& counters, std::uint32_t word_bytes, std::uint64_t capacity,
              std::vector<std::uint64_t>& burst) {
    if (counters.done) throw OutOfRangeError("AGU advanced past the end of its loop nest");
    const std::uint64_t tile = tile_base(desc, counters);
    burst.resize(desc.ports());
    for (std::uint32_t p = 0; p < desc.ports(); ++p) {
        const std::uint64_t addr = tile + (p / desc.row_words) * desc.row_pitch + std::uint64_t{p % desc.row_words} * word_bytes;
        if (addr % word_bytes != 0) throw MisalignedError("AGU address " + std::to_string(addr) + " not word aligned");
        if (addr >= capacity)
            throw OutOfRangeError("AGU address " + std::to_string(addr) + " beyond capacity " + std::to_string(capacity));
        burst[p] = addr;
    }
    for (std::size_t l = 0; l < desc.loops.size(); ++l) {
        if (++counters.index[l] < desc.loops[l].bound) return;
        counters.index[l] = 0;
    }
    counters.done = true;
}

// ---------------------------------------------------------------------------

StreamSet describe_streams(const ValidatedConfig& cfg, const StreamProgram& p) {
    StreamSet s;
    s.a.direction = StreamDirection::read;
    s.a.base = p.a_base;
    s.a.rows = cfg.mu();
    s.a.row_words = cfg.a_row_words();
    s.a.row_pitch = p.a_row_pitch;

    s.b.direction = StreamDirection::read;
    s.b.base = p.b_base;
    s.b.rows = cfg.ku();
    s.b.row_words = cfg.b_row_words();
    s.b.row_pitch = p.b_row_pitch;

    s.c.direction = StreamDirection::write;
    s.c.base = p.c_base;
    s.c.rows = cfg.mu();
    s.c.row_words = cfg.c_row_words();
    s.c.row_pitch = p.c_row_pitch;

    if (p.order == LoopOrder::mnk) {
        s.a.loops = {StreamLoop{p.k1, p.a_stride_k}, StreamLoop{p.n2, 0}, StreamLoop{p.m2, p.a_stride_m}};
        s.b.loops = {StreamLoop{p.k1, p.b_stride_k}, StreamLoop{p.n2, p.b_stride_n}, StreamLoop{p.m2, 0}};
        s.c.loops = {StreamLoop{p.n2, p.c_stride_n}, StreamLoop{p.m2, p.c_stride_m}, StreamLoop{1, 0}};
    } else {
        s.a.loops = {StreamLoop{p.k1, p.a_stride_k}, StreamLoop{p.m2, p.a_stride_m}, StreamLoop{p.n2, 0}};
        s.b.loops = {StreamLoop{p.k1, p.b_stride_k}, StreamLoop{p.m2, 0}, StreamLoop{p.n2, p.b_stride_n}};
        s.c.loops = {StreamLoop{p.m2, p.c_stride_m}, StreamLoop{p.n2, p.c_stride_n}, StreamLoop{1, 0}};
    }
    return s;
}

bool interleaving_supported(const ValidatedConfig& cfg) noexcept {
    const std::uint64_t group = std::max(cfg.a_tile_words(), cfg.b_tile_words());
    return 2 * group <= cfg.raw().n_bank && cfg.raw().n_bank % (2 * group) == 0;
}

OperandPlan plan_layout(const ValidatedConfig& cfg, GemmDims dims, Layout layout, LoopOrder order, std::uint64_t base) {
    const LoopNest nest = LoopNest::for_job(cfg, dims, order);
    const std::uint64_t wb = cfg.word_bytes();
    const std::uint64_t m2 = nest.m2, k1 = nest.k1, n2 = nest.n2;

    OperandPlan plan;
    plan.dims = dims;
    plan.requested = layout;
    plan.layout = (layout == Layout::interleaved && interleaving_supported(cfg)) ? Layout::interleaved
                                                                                 : Layout::contiguous;
    StreamProgram& p = plan.program;
    p.m2 = nest.m2;
    p.k1 = nest.k1;
    p.n2 = nest.n2;
    p.order = order;

    if (plan.layout == Layout::contiguous) {
        const std::uint64_t a_pitch = k1 * cfg.a_row_words();
        const std::uint64_t b_pitch = n2 * cfg.b_row_words();
        const std::uint64_t c_pitch = n2 * cfg.c_row_words();
        const std::uint64_t a_words = m2 * cfg.mu() * a_pitch;
        const std::uint64_t b_words = k1 * cfg.ku() * b_pitch;
        const std::uint64_t c_words = m2 * cfg.mu() * c_pitch;

        p.a_base = base;
        p.a_stride_k = cfg.a_row_words() * wb;
        p.a_stride_m = cfg.mu() * a_pitch * wb;
        p.a_row_pitch = a_pitch * wb;

        p.b_base = base + a_words * wb;
        p.b_stride_k = cfg.ku() * b_pitch * wb;
        p.b_stride_n = cfg.b_row_words() * wb;
        p.b_row_pitch = b_pitch * wb;

        p.c_base = p.b_base + b_words * wb;
        p.c_stride_n = cfg.c_row_words() * wb;
        p.c_stride_m = cfg.mu() * c_pitch * wb;
        p.c_row_pitch = c_pitch * wb;

        plan.footprint_bytes = (a_words + b_words + c_words) * wb;
    } else {
        const std::uint64_t group = std::max(cfg.a_tile_words(), cfg.b_tile_words());
        const std::uint64_t a_tiles = m2 * k1;
        const std::uint64_t b_tiles = k1 * n2;
        const std::uint64_t ab_span = 2 * group * std::max(a_tiles, b_tiles);
        const std::uint64_t c_tile = cfg.c_tile_words();

        p.a_base = base;
        p.a_stride_k = 2 * group * wb;
        p.a_stride_m = 2 * group * k1 * wb;
        p.a_row_pitch = cfg.a_row_words() * wb;

        p.b_base = base + group * wb;
        p.b_stride_k = 2 * group * wb;
        p.b_stride_n = 2 * group * k1 * wb;
        p.b_row_pitch = cfg.b_row_words() * wb;

        p.c_base = base + ab_span * wb;
        p.c_stride_n = c_tile * wb;
        p.c_stride_m = c_tile * n2 * wb;
        p.c_row_pitch = cfg.c_row_words() * wb;

        plan.footprint_bytes = (ab_span + m2 * n2 * c_tile) * wb;
    }
    return plan;
}

bool fits_spm(const ValidatedConfig& cfg, const OperandPlan& plan) noexcept {
    return plan.program.a_base + plan.footprint_bytes <= cfg.capacity_bytes();
}

std::uint64_t a_tile_address(const StreamProgram& p, std::uint32_t m, std::uint32_t k) noexcept {
    return p.a_base + m * p.a_stride_m + k * p.a_stride_k;
}

std::uint64_t b_tile_address(const StreamProgram& p, std::uint32_t k, std::uint32_t n) noexcept {
    return p.b_base + k * p.b_stride_k + n * p.b_stride_n;
}

std::uint64_t c_tile_address(const StreamProgram& p, std::uint32_t m, std::uint32_t n) noexcept {
    return p.c_base + m * p.c_stride_m + n * p.c_stride_n;
}

void load_operands(const ValidatedConfig& cfg, const OperandPlan& plan, const OperandMatrix& a,
                   const OperandMatrix& b, std::span<std::uint8_t> memory) {
    if (a.rows() != plan.dims.m || a.cols() != plan.dims.k || b.rows() != plan.dims.k || b.cols() != plan.dims.n)
        throw ShapeMismatchError("operands do not match the planned job dimensions");
    if (!fits_spm(cfg, plan)) throw CapacityError("job footprint exceeds SPM capacity");

    const StreamProgram& p = plan.program;
    const auto begin = memory.begin() + static_cast<std::ptrdiff_t>(p.a_base);
    std::fill(begin, begin + static_cast<std::ptrdiff_t>(plan.footprint_bytes), std::uint8_t{0});

    const std::uint32_t mu = cfg.mu(), ku = cfg.ku(), nu = cfg.nu();
    const unsigned pa = cfg.raw().pa_bits, pb = cfg.raw().pb_bits;
    for (std::uint32_t m = 0; m < p.m2; ++m) {
        for (std::uint32_t k = 0; k < p.k1; ++k) {
            const std::uint64_t tile = a_tile_address(p, m, k);
            for (std::uint32_t r = 0; r < mu; ++r) {
                const std::size_t row = std::size_t{m} * mu + r;
                if (row >= a.rows()) break;
                auto bytes = memory.subspan(tile + r * p.a_row_pitch, std::size_t{cfg.a_row_words()} * cfg.word_bytes());
                for (std::uint32_t e = 0; e < ku; ++e) {
                    const std::size_t col = std::size_t{k} * ku + e;
                    if (col >= a.cols()) break;
                    pack_element(bytes, std::size_t{e} * pa, pa, a(row, col));
                }
            }
        }
    }
    for (std::uint32_t k = 0; k < p.k1; ++k) {
        for (std::uint32_t n = 0; n < p.n2; ++n) {
            const std::uint64_t tile = b_tile_address(p, k, n);
            for (std::uint32_t r = 0; r < ku; ++r) {
                const std::size_t row = std::size_t{k} * ku + r;
                if (row >= b.rows()) break;
                auto bytes = memory.subspan(tile + r * p.b_row_pitch, std::size_t{cfg.b_row_words()} * cfg.word_bytes());
                for (std::uint32_t e = 0; e < nu; ++e) {
                    const std::size_t col = std::size_t{n} * nu + e;
                    if (col >= b.cols()) break;
                    pack_element(bytes, std::size_t{e} * pb, pb, b(row, col));
                }
            }
        }
    }
}

ResultMatrix read_result(const ValidatedConfig& cfg, const OperandPlan& plan, std::span<const std::uint8_t> memory) {
    const StreamProgram& p = plan.program;
    const unsigned pc = cfg.raw().pc_bits;
    ResultMatrix c(plan.dims.m, plan.dims.n);
    for (std::uint32_t m = 0; m < p.m2; ++m) {
        for (std::uint32_t n = 0; n < p.n2; ++n) {
            const std::uint64_t tile = c_tile_address(p, m, n);
            for (std::uint32_t r = 0; r < cfg.mu(); ++r) {
                const std::size_t row = std::size_t{m} * cfg.mu() + r;
                if (row >= c.rows()) break;
                auto bytes = memory.subspan(tile + r * p.c_row_pitch, std::size_t{cfg.c_row_words()} * cfg.word_bytes());
                for (std::uint32_t e = 0; e < cfg.nu(); ++e) {
                    const std::size_t col = std::size_t{n} * cfg.nu() + e;
                    if (col >= c.cols()) break;
                    c(row, col) = unpack_element(bytes, std::size_t{e} * pc, pc);
                }
            }
        }
    }
    return c;
}

void decode_tile(std::span<const std::uint8_t> words, std::uint32_t rows, std::uint32_t cols, std::uint32_t row_words,
                 std::uint32_t word_bytes, unsigned bits, std::span<std::int32_t> out) noexcept {
    const std::size_t row_bytes = std::size_t{row_words} * word_bytes;
    for (std::uint32_t r = 0; r < rows; ++r) {
        const auto row = words.subspan(r * row_bytes, row_bytes);
        if (bits == 8) {
            for (std::uint32_t e = 0; e < cols; ++e) out[std::size_t{r} * cols + e] = static_cast<std::int8_t>(row[e]);
        } else {
            for (std::uint32_t e = 0; e < cols; ++e)
                out[std::size_t{r} * cols + e] = static_cast<std::int32_t>(unpack_element(row, std::size_t{e} * bits, bits));
        }
    }
}

void encode_tile(std::span<const std::int64_t> values, std::uint32_t rows, std::uint32_t cols, std::uint32_t row_words,
                 std::uint32_t word_bytes, unsigned bits, std::span<std::uint8_t> out) noexcept {
    std::fill(out.begin(), out.end(), std::uint8_t{0});
    const std::size_t row_bytes = std::size_t{row_words} * word_bytes;
    for (std::uint32_t r = 0; r < rows; ++r) {
        auto row = out.subspan(r * row_bytes, row_bytes);
        for (std::uint32_t e = 0; e < cols; ++e) pack_element(row, std::size_t{e} * bits, bits, values[std::size_t{r} * cols + e]);
    }
}

// ---------------------------------------------------------------------------

PrefetchFifo::PrefetchFifo(std::uint32_t depth, std::size_t tile_bytes) : depth_(depth), entries_(depth) {
    if (depth == 0) throw ZeroParamError("prefetch FIFO depth must be >= 1");
    for (auto& e : entries_) e.bytes.assign(tile_bytes, 0);
}

std::span<std::uint8_t> PrefetchFifo::reserve() {
    if (!can_reserve()) throw SimulationError("prefetch FIFO overflow");
    reserved_ = true;
    return entries_[(head_ + occupancy_) % depth_].bytes;
}

void PrefetchFifo::commit(std::uint64_t ready_cycle) {
    if (!reserved_) throw SimulationError("prefetch FIFO commit without reservation");
    entries_[(head_ + occupancy_) % depth_].ready_cycle = ready_cycle;
    reserved_ = false;
    ++occupancy_;
}

void PrefetchFifo::pop() {
    if (occupancy_ == 0) throw SimulationError("prefetch FIFO underflow");
    head_ = (head_ + 1) % depth_;
    --occupancy_;
}

void PrefetchFifo::reset() noexcept {
    head_ = 0;
    occupancy_ = 0;
    reserved_ = false;
}

OutputBuffers::OutputBuffers(std::uint32_t depth, std::size_t tile_bytes) : slots_(depth) {
    if (depth == 0) throw ZeroParamError("output buffer depth must be >= 1");
    for (auto& s : slots_) s.bytes.assign(tile_bytes, 0);
}

std::span<std::uint8_t> OutputBuffers::fill(std::uint64_t cycle) {
    Slot& s = slots_[fill_];
    if (s.state != SlotState::free) throw SimulationError("output slot filled before it was drained");
    s.state = SlotState::filled;
    s.filled_cycle = cycle;
    fill_ = (fill_ + 1) % depth();
    ++fills_;
    return s.bytes;
}

void OutputBuffers::release() {
    Slot& s = slots_[drain_];
    if (s.state != SlotState::draining) throw SimulationError("output slot drained before it was filled");
    s.state = SlotState::free;
    drain_ = (drain_ + 1) % depth();
    ++drains_;
}

std::uint32_t OutputBuffers::busy_slots() const noexcept {
    return static_cast<std::uint32_t>(
        std::count_if(slots_.begin(), slots_.end(), [](const Slot& s) { return s.state != SlotState::free; }));
}

void OutputBuffers::reset() noexcept {
    for (auto& s : slots_) s.state = SlotState::free;
    fill_ = drain_ = 0;
}

// ---------------------------------------------------------------------------

InputStreamer::InputStreamer(const StreamDescriptor& desc, std::uint32_t depth, const Spm& spm, std::uint32_t first_port,
                             bool on_demand, bool functional)
    : desc_(desc),
      fifo_(depth, std::size_t{desc.ports()} * spm.word_bytes()),
      word_bytes_(spm.word_bytes()),
      capacity_(spm.capacity()),
      first_port_(first_port),
      on_demand_(on_demand),
      functional_(functional),
      granted_(desc.ports(), 0) {
    if (desc.tiles() == 0) counters_.done = true;
}

void InputStreamer::issue(std::vector<MemRequest>& out, StreamEvents& ev) {
    if (!in_flight_ && !counters_.done && fifo_.can_reserve() && (!on_demand_ || credit_ > 0)) {
        agu_next(desc_, counters_, word_bytes_, capacity_, burst_);
        slot_ = fifo_.reserve();
        std::fill(granted_.begin(), granted_.end(), std::uint8_t{0});
        outstanding_ = desc_.ports();
        in_flight_ = true;
        retries_ = 0;
        if (on_demand_) --credit_;
        ev.tile_started = true;
    }
    if (!in_flight_) return;
    for (std::uint32_t p = 0; p < desc_.ports(); ++p) {
        if (granted_[p]) continue;
        out.push_back({AccessKind::read, burst_[p], first_port_ + p, p});
        ++ev.issued;
    }
}

void InputStreamer::on_grant(std::uint32_t port, std::span<const std::uint8_t> data) noexcept {
    granted_[port] = 1;
    --outstanding_;
    if (functional_) std::memcpy(slot_.data() + std::size_t{port} * word_bytes_, data.data(), word_bytes_);
}

void InputStreamer::end_cycle(std::uint64_t cycle, StreamEvents& ev) {
    if (!in_flight_) return;
    if (outstanding_ == 0) {
        fifo_.commit(cycle + 1);
        in_flight_ = false;
        ++fetched_;
        ev.tile_completed = true;
    } else {
        ++retries_;
        max_retries_ = std::max(max_retries_, retries_);
    }
}

StreamEvents InputStreamer::prefetch_tick(Spm& spm, std::uint64_t cycle) {
    StreamEvents ev;
    scratch_.clear();
    issue(scratch_, ev);
    const Arbitration arb = spm.arbitrate(scratch_);
    for (auto idx : arb.granted) on_grant(scratch_[idx].tag, spm.read_word(scratch_[idx].addr));
    ev.granted = static_cast<std::uint32_t>(arb.granted.size());
    ev.stalled = static_cast<std::uint32_t>(arb.stalled.size());
    end_cycle(cycle, ev);
    return ev;
}

OutputWriter::OutputWriter(const StreamDescriptor& desc, std::uint32_t depth, const Spm& spm, bool functional)
    : desc_(desc),
      buffers_(depth, std::size_t{desc.ports()} * spm.word_bytes()),
      word_bytes_(spm.word_bytes()),
      capacity_(spm.capacity()),
      functional_(functional),
      granted_(desc.ports(), 0) {}

void OutputWriter::issue(std::uint64_t cycle, std::vector<MemRequest>& out, StreamEvents& ev) {
    if (!buffers_.drain_ready(cycle)) return;
    if (buffers_.drain_state() == SlotState::filled) {
        agu_next(desc_, counters_, word_bytes_, capacity_, burst_);
        buffers_.begin_drain();
        std::fill(granted_.begin(), granted_.end(), std::uint8_t{0});
        outstanding_ = desc_.ports();
        ev.tile_started = true;
    }
    for (std::uint32_t p = 0; p < desc_.ports(); ++p) {
        if (granted_[p]) continue;
        out.push_back({AccessKind::write, burst_[p], p, p});
        ++ev.issued;
    }
}

void OutputWriter::on_grant(std::uint32_t port) noexcept {
    granted_[port] = 1;
    --outstanding_;
}

void OutputWriter::end_cycle(StreamEvents& ev) {
    if (buffers_.drain_state() == SlotState::draining && outstanding_ == 0) {
        buffers_.release();
        ++written_;
        ev.tile_completed = true;
    }
}

StreamEvents OutputWriter::writeback_tick(Spm& spm, std::uint64_t cycle) {
    StreamEvents ev;
    scratch_.clear();
    issue(cycle, scratch_, ev);
    const Arbitration arb = spm.arbitrate(scratch_);
    for (auto idx : arb.granted) {
        const auto& r = scratch_[idx];
        if (functional_) spm.stage_write(r.addr, word_for(r.tag));
        on_grant(r.tag);
    }
    spm.commit_writes();
    ev.granted = static_cast<std::uint32_t>(arb.granted.size());
    ev.stalled = static_cast<std::uint32_t>(arb.stalled.size());
    end_cycle(ev);
    return ev;
}

}  // namespace gemmsim
