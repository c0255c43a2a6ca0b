#include <gemmsim/gemm_core.hpp>

#include <gemmsim/errors.hpp>

#include <algorithm>
#include <string>

namespace gemmsim {

namespace {

std::uint32_t ceil_div(std::uint32_t a, std::uint32_t b) { return (a + b - 1) / b; }

}  // namespace

void pack_element(std::span<std::uint8_t> bytes, std::size_t bit_offset, unsigned width, std::int64_t value) noexcept {
    const std::uint64_t u = static_cast<std::uint64_t>(value);
    if (bit_offset % 8 == 0 && width % 8 == 0) {
        for (unsigned i = 0; i < width / 8; ++i) bytes[bit_offset / 8 + i] = static_cast<std::uint8_t>(u >> (8 * i));
        return;
    }
    for (unsigned i = 0; i < width; ++i) {
        const std::size_t bit = bit_offset + i;
        const auto mask = static_cast<std::uint8_t>(1u << (bit % 8));
        if ((u >> i) & 1u)
            bytes[bit / 8] |= mask;
        else
            bytes[bit / 8] &= static_cast<std::uint8_t>(~mask);
    }
}

std::int64_t unpack_element(std::span<const std::uint8_t> bytes, std::size_t bit_offset, unsigned width) noexcept {
    std::uint64_t u = 0;
    if (bit_offset % 8 == 0 && width % 8 == 0) {
        for (unsigned i = 0; i < width / 8; ++i) u |= std::uint64_t{bytes[bit_offset / 8 + i]} << (8 * i);
    } else {
        for (unsigned i = 0; i < width; ++i) {
            const std::size_t bit = bit_offset + i;
            u |= std::uint64_t{(bytes[bit / 8] >> (bit % 8)) & 1u} << i;
        }
    }
    return wrap_to_bits(static_cast<std::int64_t>(u), width);
}

std::int64_t dotprod(std::span<const std::int32_t> a, std::span<const std::int32_t> b, std::int64_t acc,
                     unsigned pc_bits, std::size_t b_stride) noexcept {
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::int64_t{a[i]} * b[i * b_stride];
    // Unsigned add so wraparound at 64 bits is defined too.
    return wrap_to_bits(static_cast<std::int64_t>(static_cast<std::uint64_t>(acc) + static_cast<std::uint64_t>(sum)),
                        pc_bits);
}

void tile_step(const CoreShape& shape, std::span<std::int64_t> acc, std::span<const std::int32_t> a_tile,
               std::span<const std::int32_t> b_tile) noexcept {
    for (std::uint32_t i = 0; i < shape.mu; ++i) {
        const auto a_row = a_tile.subspan(std::size_t{i} * shape.ku, shape.ku);
        for (std::uint32_t j = 0; j < shape.nu; ++j) {
            auto& c = acc[std::size_t{i} * shape.nu + j];
            c = dotprod(a_row, b_tile.subspan(j), c, shape.pc_bits, shape.nu);
        }
    }
}

const char* to_string(LoopOrder order) noexcept { return order == LoopOrder::mnk ? "mnk" : "nmk"; }

LoopNest LoopNest::for_job(const ValidatedConfig& cfg, GemmDims dims, LoopOrder order) {
    if (dims.m == 0 || dims.k == 0 || dims.n == 0) throw ShapeMismatchError("GeMM dimensions must be >= 1");
    return {ceil_div(dims.m, cfg.mu()), ceil_div(dims.n, cfg.nu()), ceil_div(dims.k, cfg.ku()),
            cfg.mu(),                   cfg.nu(),                   cfg.ku(),
            order};
}

std::pair<std::uint32_t, std::uint32_t> LoopNest::output_tile(std::uint64_t index) const noexcept {
    if (order == LoopOrder::mnk)
        return {static_cast<std::uint32_t>(index / n2), static_cast<std::uint32_t>(index % n2)};
    return {static_cast<std::uint32_t>(index % m2), static_cast<std::uint32_t>(index / m2)};
}

ControllerState ControllerState::start(const LoopNest& nest) noexcept {
    ControllerState s;
    s.nest = nest;
    s.phase = CorePhase::computing;
    return s;
}

ControllerStep controller_next(const ControllerState& state, bool a_valid, bool b_valid, bool out_ready) noexcept {
    ControllerStep step{state, action::none, CoreStall::none};
    ControllerState& s = step.next;

    if (s.phase == CorePhase::idle) return step;
    if (s.phase == CorePhase::draining) {
        step.actions = action::done;
        step.stall = CoreStall::finished;
        return step;
    }

    const bool last_k = s.k + 1 == s.nest.k1;
    if (last_k && !out_ready) {
        step.stall = CoreStall::output;
    } else if (!(a_valid && b_valid)) {
        step.stall = CoreStall::input;
    } else {
        step.actions |= action::compute;
        ++s.computed;
        if (last_k) {
            step.actions |= action::emit_c_tile | action::reset_acc;
            ++s.emitted;
            s.k = 0;
            ++s.out_index;
            if (s.out_index == s.nest.output_tiles()) {
                s.phase = CorePhase::draining;
                step.actions |= action::done;
            }
        } else {
            ++s.k;
        }
    }

    if (s.phase == CorePhase::computing && s.requested == s.computed && s.requested < s.nest.compute_steps()) {
        step.actions |= action::request_inputs;
        ++s.requested;
    }
    return step;
}

void extract_a_tile(const OperandMatrix& a, std::uint32_t m, std::uint32_t k, const CoreShape& shape,
                    std::span<std::int32_t> out) noexcept {
    for (std::uint32_t i = 0; i < shape.mu; ++i) {
        const std::size_t row = std::size_t{m} * shape.mu + i;
        for (std::uint32_t e = 0; e < shape.ku; ++e) {
            const std::size_t col = std::size_t{k} * shape.ku + e;
            out[std::size_t{i} * shape.ku + e] = (row < a.rows() && col < a.cols()) ? a(row, col) : 0;
        }
    }
}

void extract_b_tile(const OperandMatrix& b, std::uint32_t k, std::uint32_t n, const CoreShape& shape,
                    std::span<std::int32_t> out) noexcept {
    for (std::uint32_t i = 0; i < shape.ku; ++i) {
        const std::size_t row = std::size_t{k} * shape.ku + i;
        for (std::uint32_t j = 0; j < shape.nu; ++j) {
            const std::size_t col = std::size_t{n} * shape.nu + j;
            out[std::size_t{i} * shape.nu + j] = (row < b.rows() && col < b.cols()) ? b(row, col) : 0;
        }
    }
}

ResultMatrix run_functional(const ValidatedConfig& cfg, const OperandMatrix& a, const OperandMatrix& b,
                            LoopOrder order) {
    if (a.cols() != b.rows())
        throw ShapeMismatchError("A is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " but B is " +
                                 std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    if (a.rows() == 0 || a.cols() == 0 || b.cols() == 0) throw ShapeMismatchError("empty operand");

    const CoreShape shape = CoreShape::from(cfg);
    const GemmDims dims{static_cast<std::uint32_t>(a.rows()), static_cast<std::uint32_t>(a.cols()),
                        static_cast<std::uint32_t>(b.cols())};
    const LoopNest nest = LoopNest::for_job(cfg, dims, order);

    ResultMatrix c(dims.m, dims.n);
    std::vector<std::int32_t> a_tile(std::size_t{shape.mu} * shape.ku);
    std::vector<std::int32_t> b_tile(std::size_t{shape.ku} * shape.nu);
    std::vector<std::int64_t> acc(std::size_t{shape.mu} * shape.nu);

    for (std::uint64_t t = 0; t < nest.output_tiles(); ++t) {
        const auto [m, n] = nest.output_tile(t);
        std::fill(acc.begin(), acc.end(), 0);
        for (std::uint32_t k = 0; k < nest.k1; ++k) {
            extract_a_tile(a, m, k, shape, a_tile);
            extract_b_tile(b, k, n, shape, b_tile);
            tile_step(shape, acc, a_tile, b_tile);
        }
        for (std::uint32_t i = 0; i < shape.mu; ++i) {
            const std::size_t row = std::size_t{m} * shape.mu + i;
            if (row >= dims.m) break;
            for (std::uint32_t j = 0; j < shape.nu; ++j) {
                const std::size_t col = std::size_t{n} * shape.nu + j;
                if (col < dims.n) c(row, col) = acc[std::size_t{i} * shape.nu + j];
            }
        }
    }
    return c;
}

}  // namespace gemmsim
