#pragma once

#include <gemmsim/job.hpp>
#include <gemmsim/matrix.hpp>
#include <gemmsim/platform_config.hpp>
#include <gemmsim/spm.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace gemmsim {

// ---------------------------------------------------------------------------
// Address generation
// ---------------------------------------------------------------------------

enum class StreamDirection : std::uint8_t { read, write };

struct StreamLoop {
    std::uint32_t bound = 1;
    std::uint64_t stride = 0;  // bytes

    bool operator==(const StreamLoop&) const = default;
};

/// Run-time AGU program of one streamer.
///
/// Temporal loops are listed innermost first. Within a tile, port p reads
/// row p / row_words, word p % row_words; rows are row_pitch bytes apart and
/// words of a row are adjacent. rows and row_words are fixed at design time.
struct StreamDescriptor {
    StreamDirection direction = StreamDirection::read;
    std::uint64_t base = 0;
    std::array<StreamLoop, 3> loops{};
    std::uint32_t rows = 1;
    std::uint32_t row_words = 1;
    std::uint64_t row_pitch = 0;

    std::uint32_t ports() const noexcept { return rows * row_words; }
    std::uint64_t tiles() const noexcept {
        return std::uint64_t{loops[0].bound} * loops[1].bound * loops[2].bound;
    }

    bool operator==(const StreamDescriptor&) const = default;
};

struct AguCounters {
    std::array<std::uint32_t, 3> index{};
    bool done = false;

    bool operator==(const AguCounters&) const = default;
};

/// Byte address of the tile at the current counters.
std::uint64_t tile_base(const StreamDescriptor& desc, const AguCounters& counters) noexcept;

/// Writes the port addresses of the tile at `counters` into `burst` and
/// advances the innermost counter first. Throws OutOfRangeError when an
/// address falls outside [0, capacity) and MisalignedError off word bounds.
void agu_next(const StreamDescriptor& desc, AguCounters& counters, std::uint32_t word_bytes, std::uint64_t capacity,
              std::vector<std::uint64_t>& burst);

// ---------------------------------------------------------------------------
// Operand placement
// ---------------------------------------------------------------------------

/// Every field the host programs for one job. Strides and pitches in bytes.
struct StreamProgram {
    std::uint32_t m2 = 1;
    std::uint32_t k1 = 1;
    std::uint32_t n2 = 1;
    LoopOrder order = LoopOrder::mnk;
    std::uint64_t a_base = 0;
    std::uint64_t b_base = 0;
    std::uint64_t c_base = 0;
    std::uint64_t a_stride_k = 0;
    std::uint64_t a_stride_m = 0;
    std::uint64_t b_stride_k = 0;
    std::uint64_t b_stride_n = 0;
    std::uint64_t c_stride_n = 0;
    std::uint64_t c_stride_m = 0;
    std::uint64_t a_row_pitch = 0;
    std::uint64_t b_row_pitch = 0;
    std::uint64_t c_row_pitch = 0;

    bool operator==(const StreamProgram&) const = default;
};

struct StreamSet {
    StreamDescriptor a;
    StreamDescriptor b;
    StreamDescriptor c;
};

/// Expands a program into the three streamer descriptors, adding the
/// zero-stride reuse loop each operand needs for the chosen loop order.
StreamSet describe_streams(const ValidatedConfig& cfg, const StreamProgram& program);

struct OperandPlan {
    GemmDims dims;
    Layout requested = Layout::interleaved;
    Layout layout = Layout::interleaved;  // effective: interleaved may fall back
    StreamProgram program;
    std::uint64_t footprint_bytes = 0;    // [base, end) touched by A, B and C
};

/// True when the bank count allows A' and B' tiles to be kept in disjoint
/// bank groups.
bool interleaving_supported(const ValidatedConfig& cfg) noexcept;

/// Places A, B and C starting at byte `base`. Does not check capacity.
OperandPlan plan_layout(const ValidatedConfig& cfg, GemmDims dims, Layout layout, LoopOrder order = LoopOrder::mnk,
                        std::uint64_t base = 0);

bool fits_spm(const ValidatedConfig& cfg, const OperandPlan& plan) noexcept;

std::uint64_t a_tile_address(const StreamProgram& p, std::uint32_t m, std::uint32_t k) noexcept;
std::uint64_t b_tile_address(const StreamProgram& p, std::uint32_t k, std::uint32_t n) noexcept;
std::uint64_t c_tile_address(const StreamProgram& p, std::uint32_t m, std::uint32_t n) noexcept;

/// Zero-fills the footprint and writes A and B (padded) per the plan.
void load_operands(const ValidatedConfig& cfg, const OperandPlan& plan, const OperandMatrix& a,
                   const OperandMatrix& b, std::span<std::uint8_t> memory);

/// Reads the M x N result back, dropping padded lanes.
ResultMatrix read_result(const ValidatedConfig& cfg, const OperandPlan& plan, std::span<const std::uint8_t> memory);

// Tile (de)serialisation between port words and element arrays.
void decode_tile(std::span<const std::uint8_t> words, std::uint32_t rows, std::uint32_t cols, std::uint32_t row_words,
                 std::uint32_t word_bytes, unsigned bits, std::span<std::int32_t> out) noexcept;
void encode_tile(std::span<const std::int64_t> values, std::uint32_t rows, std::uint32_t cols, std::uint32_t row_words,
                 std::uint32_t word_bytes, unsigned bits, std::span<std::uint8_t> out) noexcept;

// ---------------------------------------------------------------------------
// Buffers
// ---------------------------------------------------------------------------

/// Ring of complete operand tiles. A slot may be reserved for an in-flight
/// fetch; it only becomes visible once committed.
class PrefetchFifo {
public:
    PrefetchFifo(std::uint32_t depth, std::size_t tile_bytes);

    std::uint32_t depth() const noexcept { return depth_; }
    std::uint32_t occupancy() const noexcept { return occupancy_; }
    bool reserved() const noexcept { return reserved_; }
    bool can_reserve() const noexcept { return !reserved_ && occupancy_ < depth_; }
    bool full() const noexcept { return occupancy_ == depth_; }

    std::span<std::uint8_t> reserve();
    void commit(std::uint64_t ready_cycle);

    bool head_ready(std::uint64_t cycle) const noexcept {
        return occupancy_ > 0 && entries_[head_].ready_cycle <= cycle;
    }
    std::span<const std::uint8_t> head() const noexcept { return entries_[head_].bytes; }
    void pop();
    void reset() noexcept;

private:
    struct Entry {
        std::uint64_t ready_cycle = 0;
        std::vector<std::uint8_t> bytes;
    };
    std::uint32_t depth_;
    std::vector<Entry> entries_;
    std::uint32_t head_ = 0;
    std::uint32_t occupancy_ = 0;
    bool reserved_ = false;
};

enum class SlotState : std::uint8_t { free, filled, draining };

/// Round-robin output slots between the core and the C writer.
class OutputBuffers {
public:
    OutputBuffers(std::uint32_t depth, std::size_t tile_bytes);

    std::uint32_t depth() const noexcept { return static_cast<std::uint32_t>(slots_.size()); }
    bool can_fill() const noexcept { return slots_[fill_].state == SlotState::free; }
    std::span<std::uint8_t> fill(std::uint64_t cycle);  // marks the slot filled
    std::uint32_t fill_pointer() const noexcept { return fill_; }
    std::uint32_t drain_pointer() const noexcept { return drain_; }

    // Oldest slot, if it was filled before `cycle`.
    bool drain_ready(std::uint64_t cycle) const noexcept {
        const auto& s = slots_[drain_];
        return s.state == SlotState::draining || (s.state == SlotState::filled && s.filled_cycle < cycle);
    }
    SlotState drain_state() const noexcept { return slots_[drain_].state; }
    void begin_drain() noexcept { slots_[drain_].state = SlotState::draining; }
    std::span<const std::uint8_t> drain_bytes() const noexcept { return slots_[drain_].bytes; }
    void release();  // drain slot -> free, advance drain pointer
    std::uint32_t busy_slots() const noexcept;
    std::uint64_t fills() const noexcept { return fills_; }
    std::uint64_t drains() const noexcept { return drains_; }
    void reset() noexcept;

private:
    struct Slot {
        SlotState state = SlotState::free;
        std::uint64_t filled_cycle = 0;
        std::vector<std::uint8_t> bytes;
    };
    std::vector<Slot> slots_;
    std::uint32_t fill_ = 0;
    std::uint32_t drain_ = 0;
    std::uint64_t fills_ = 0;
    std::uint64_t drains_ = 0;
};

// ---------------------------------------------------------------------------
// Streamers
// ---------------------------------------------------------------------------

struct StreamEvents {
    std::uint32_t issued = 0;
    std::uint32_t granted = 0;
    std::uint32_t stalled = 0;
    bool tile_started = false;
    bool tile_completed = false;
};

/// A- or B-reader: AGU, in-flight tile, prefetch FIFO.
///
/// In prefetch mode the next tile is fetched whenever the FIFO has room. In
/// on-demand mode a fetch needs a request credit from the core; a credit
/// raised in cycle t can start a fetch in cycle t + 1.
class InputStreamer {
public:
    InputStreamer(const StreamDescriptor& desc, std::uint32_t depth, const Spm& spm, std::uint32_t first_port,
                  bool on_demand, bool functional);

    const StreamDescriptor& descriptor() const noexcept { return desc_; }
    const PrefetchFifo& fifo() const noexcept { return fifo_; }
    PrefetchFifo& fifo() noexcept { return fifo_; }
    std::uint64_t tiles_fetched() const noexcept { return fetched_; }
    bool exhausted() const noexcept { return counters_.done && !in_flight_; }
    std::uint32_t max_retries() const noexcept { return max_retries_; }

    void add_credit() noexcept { ++credit_; }

    // Appends this cycle's word requests; `tag` carries the port index.
    void issue(std::vector<MemRequest>& out, StreamEvents& ev);
    void on_grant(std::uint32_t port, std::span<const std::uint8_t> data) noexcept;
    // After arbitration: completes the in-flight tile.
    void end_cycle(std::uint64_t cycle, StreamEvents& ev);

    /// issue + arbitrate against `spm` alone + end_cycle.
    StreamEvents prefetch_tick(Spm& spm, std::uint64_t cycle);

private:
    StreamDescriptor desc_;
    PrefetchFifo fifo_;
    std::uint32_t word_bytes_;
    std::uint64_t capacity_;
    std::uint32_t first_port_;
    bool on_demand_;
    bool functional_;

    AguCounters counters_;
    std::vector<std::uint64_t> burst_;
    std::vector<std::uint8_t> granted_;
    std::uint32_t outstanding_ = 0;
    bool in_flight_ = false;
    std::uint32_t retries_ = 0;
    std::uint32_t max_retries_ = 0;
    std::span<std::uint8_t> slot_;
    std::uint64_t fetched_ = 0;
    std::uint32_t credit_ = 0;
    std::vector<MemRequest> scratch_;
};

/// C-writer draining the oldest filled output slot at up to one word per
/// write port per cycle.
class OutputWriter {
public:
    OutputWriter(const StreamDescriptor& desc, std::uint32_t depth, const Spm& spm, bool functional);

    OutputBuffers& buffers() noexcept { return buffers_; }
    const OutputBuffers& buffers() const noexcept { return buffers_; }
    std::uint64_t tiles_written() const noexcept { return written_; }
    bool idle() const noexcept { return buffers_.busy_slots() == 0; }

    void issue(std::uint64_t cycle, std::vector<MemRequest>& out, StreamEvents& ev);
    std::span<const std::uint8_t> word_for(std::uint32_t port) const noexcept {
        return buffers_.drain_bytes().subspan(std::size_t{port} * word_bytes_, word_bytes_);
    }
    void on_grant(std::uint32_t port) noexcept;
    // Called after the core step: frees the slot when its last word landed.
    void end_cycle(StreamEvents& ev);

    /// issue + arbitrate + stage/commit writes + end_cycle.
    StreamEvents writeback_tick(Spm& spm, std::uint64_t cycle);

private:
    StreamDescriptor desc_;
    OutputBuffers buffers_;
    std::uint32_t word_bytes_;
    std::uint64_t capacity_;
    bool functional_;

    AguCounters counters_;
    std::vector<std::uint64_t> burst_;
    std::vector<std::uint8_t> granted_;
    std::uint32_t outstanding_ = 0;
    std::uint64_t written_ = 0;
    std::vector<MemRequest> scratch_;
};

}  // namespace gemmsim
