#pragma once

#include <gemmsim/matrix.hpp>
#include <gemmsim/platform_config.hpp>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace gemmsim {

struct GemmDims {
    std::uint32_t m = 1;
    std::uint32_t k = 1;
    std::uint32_t n = 1;

    std::uint64_t macs() const noexcept { return std::uint64_t{m} * k * n; }
    bool operator==(const GemmDims&) const = default;
};

struct CoreShape {
    std::uint32_t mu = 1;
    std::uint32_t nu = 1;
    std::uint32_t ku = 1;
    std::uint32_t pc_bits = 32;

    static CoreShape from(const ValidatedConfig& cfg) noexcept {
        return {cfg.mu(), cfg.nu(), cfg.ku(), cfg.raw().pc_bits};
    }
};

/// acc + sum(a[i] * b[i]) wrapped to pc_bits. b is read with `b_stride` so a
/// column of a row-major B' tile can be passed directly.
std::int64_t dotprod(std::span<const std::int32_t> a, std::span<const std::int32_t> b, std::int64_t acc,
                     unsigned pc_bits, std::size_t b_stride = 1) noexcept;

/// One array cycle: acc(i, j) = dotprod(A'(i, :), B'(:, j), acc(i, j)).
/// a_tile is mu x ku, b_tile ku x nu, acc mu x nu, all row-major.
void tile_step(const CoreShape& shape, std::span<std::int64_t> acc, std::span<const std::int32_t> a_tile,
               std::span<const std::int32_t> b_tile) noexcept;

/// Temporal loop order, outermost first. k1 is always innermost.
enum class LoopOrder : std::uint8_t { mnk = 0, nmk = 1 };

const char* to_string(LoopOrder order) noexcept;

/// The 6-loop nest: temporal bounds (m2, n2, k1) over spatial (mu, nu, ku).
struct LoopNest {
    std::uint32_t m2 = 1;
    std::uint32_t n2 = 1;
    std::uint32_t k1 = 1;
    std::uint32_t mu = 1;
    std::uint32_t nu = 1;
    std::uint32_t ku = 1;
    LoopOrder order = LoopOrder::mnk;

    static LoopNest for_job(const ValidatedConfig& cfg, GemmDims dims, LoopOrder order = LoopOrder::mnk);

    std::uint64_t compute_steps() const noexcept { return std::uint64_t{m2} * n2 * k1; }
    std::uint64_t output_tiles() const noexcept { return std::uint64_t{m2} * n2; }

    // (m, n) tile coordinates of the index-th output tile in loop order.
    std::pair<std::uint32_t, std::uint32_t> output_tile(std::uint64_t index) const noexcept;

    bool operator==(const LoopNest&) const = default;
};

enum class CorePhase : std::uint8_t { idle, computing, draining };

namespace action {
inline constexpr std::uint8_t none = 0;
inline constexpr std::uint8_t request_inputs = 1u << 0;
inline constexpr std::uint8_t compute = 1u << 1;
inline constexpr std::uint8_t emit_c_tile = 1u << 2;
inline constexpr std::uint8_t reset_acc = 1u << 3;
inline constexpr std::uint8_t done = 1u << 4;
}  // namespace action

enum class CoreStall : std::uint8_t { none, input, output, finished };

/// Loop counters of the built-in hardware loop controller.
struct ControllerState {
    LoopNest nest;
    CorePhase phase = CorePhase::idle;
    std::uint32_t k = 0;             // position in the innermost loop
    std::uint64_t out_index = 0;     // current output tile, loop order
    std::uint64_t computed = 0;      // compute cycles so far == input tiles consumed
    std::uint64_t emitted = 0;
    std::uint64_t requested = 0;     // input tile pairs requested

    static ControllerState start(const LoopNest& nest) noexcept;

    std::pair<std::uint32_t, std::uint32_t> tile_mn() const noexcept { return nest.output_tile(out_index); }
};

struct ControllerStep {
    ControllerState next;
    std::uint8_t actions = action::none;
    CoreStall stall = CoreStall::none;
};

/// One cycle of the loop controller. Compute fires only with both operand
/// tiles valid; the cycle that completes a C' tile also emits it and needs
/// out_ready, otherwise the core stalls without advancing. request_inputs is
/// raised whenever no input request is outstanding.
ControllerStep controller_next(const ControllerState& state, bool a_valid, bool b_valid, bool out_ready) noexcept;

/// Loop counters plus the mu x nu accumulator bank.
struct CoreState {
    ControllerState ctl;
    std::vector<std::int64_t> acc;

    static CoreState start(const LoopNest& nest) {
        return {ControllerState::start(nest), std::vector<std::int64_t>(std::size_t{nest.mu} * nest.nu, 0)};
    }
};

/// Copies the zero-padded (m, k) A' tile / (k, n) B' tile into `out`.
void extract_a_tile(const OperandMatrix& a, std::uint32_t m, std::uint32_t k, const CoreShape& shape,
                    std::span<std::int32_t> out) noexcept;
void extract_b_tile(const OperandMatrix& b, std::uint32_t k, std::uint32_t n, const CoreShape& shape,
                    std::span<std::int32_t> out) noexcept;

/// Tile-by-tile product through the array datapath (no timing). Edges are
/// zero-padded; throws ShapeMismatchError.
ResultMatrix run_functional(const ValidatedConfig& cfg, const OperandMatrix& a, const OperandMatrix& b,
                            LoopOrder order = LoopOrder::mnk);

}  // namespace gemmsim
