#pragma once

#include <gemmsim/gemm_core.hpp>

#include <cstdint>
#include <string>

namespace gemmsim {

/// Operand placement in the scratchpad.
///
/// contiguous: plain row-major matrices placed back to back; streamers walk
/// them with row-pitch strides.
/// interleaved: tiles stored whole, A' tiles in even bank groups and B'
/// tiles in odd ones, so an A' and a B' fetch never share a bank.
enum class Layout : std::uint8_t { contiguous, interleaved };

const char* to_string(Layout layout) noexcept;
Layout parse_layout(const std::string& text);

/// One accelerator invocation.
struct GemmJob {
    GemmDims dims;
    Layout layout = Layout::interleaved;
    LoopOrder order = LoopOrder::mnk;

    // Bookkeeping: originating workload, repetition, sub-job index, and the
    // position of this sub-job's C block inside the parent result.
    std::uint32_t workload = 0;
    std::uint32_t rep = 0;
    std::uint32_t part = 0;
    std::uint32_t m_offset = 0;
    std::uint32_t n_offset = 0;

    bool operator==(const GemmJob&) const = default;
};

}  // namespace gemmsim
