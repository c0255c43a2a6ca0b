#pragma once

#include <gemmsim/platform_config.hpp>
#include <gemmsim/streamer.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace gemmsim {

namespace csr {

inline constexpr std::uint32_t base_address = 0x3c0;
inline constexpr std::uint32_t register_count = 16;

// Register indices relative to base_address.
inline constexpr std::uint32_t bounds = 0;     // m2 [9:0], k1 [19:10], n2 [29:20]
inline constexpr std::uint32_t a_base = 1;     // byte address [23:0]
inline constexpr std::uint32_t b_base = 2;
inline constexpr std::uint32_t c_base = 3;
inline constexpr std::uint32_t a_strides = 4;  // k [15:0], m [31:16], words
inline constexpr std::uint32_t b_strides = 5;  // k [15:0], n [31:16], words
inline constexpr std::uint32_t c_strides = 6;  // n [15:0], m [31:16], words
inline constexpr std::uint32_t pitch_ab = 7;   // A row pitch [15:0], B row pitch [31:16], words
inline constexpr std::uint32_t ctrl = 8;       // C row pitch [15:0], loop order [16], start [31]
inline constexpr std::uint32_t scratch = 15;   // no effect; target of padding writes

inline constexpr std::uint32_t start_bit = 1u << 31;

}  // namespace csr

struct CsrField {
    std::string name;
    std::uint32_t reg = 0;
    std::uint32_t lsb = 0;
    std::uint32_t width = 0;
    std::string unit;  // "tiles", "bytes", "words" or "flag"
};

/// The register map, one entry per packed field.
const std::vector<CsrField>& csr_map();

/// csr_map() as JSON, the same content as data/csr_map.json.
std::string csr_map_json();

struct CsrWrite {
    std::uint32_t addr = 0;
    std::uint32_t value = 0;

    bool operator==(const CsrWrite&) const = default;
};

/// Ordered host writes for one job; one write per cycle. The last write
/// carries the start bit.
struct CsrProgram {
    std::vector<CsrWrite> writes;

    std::size_t size() const noexcept { return writes.size(); }
};

/// Packs `program` into the CSR map. `extra_writes` scratch writes are
/// inserted before the control write to model a larger register file.
/// Throws FieldOverflowError when a value does not fit its field and
/// MisalignedError for strides that are not whole words.
CsrProgram build_csr_program(const ValidatedConfig& cfg, const StreamProgram& program, std::uint32_t extra_writes = 0);

using CsrRegisters = std::array<std::uint32_t, csr::register_count>;

/// Inverse of build_csr_program on a register snapshot.
StreamProgram decode_csr_registers(const ValidatedConfig& cfg, const CsrRegisters& regs);

enum class CsrTarget : std::uint8_t { active, shadow };

/// Active and shadow register sets of the CSR manager.
///
/// A control write with the start bit set marks the written set: on the
/// active set it requests a start, on the shadow set it makes the shadow
/// valid. commit_shadow() copies shadow to active and requests a start.
class CsrFile {
public:
    void apply_write(CsrTarget target, std::uint32_t addr, std::uint32_t value);
    void commit_shadow();

    const CsrRegisters& active() const noexcept { return active_; }
    const CsrRegisters& shadow() const noexcept { return shadow_; }
    bool shadow_valid() const noexcept { return shadow_valid_; }
    bool start_pending() const noexcept { return start_pending_; }

    // Clears and returns the pending start request.
    bool take_start() noexcept;

private:
    CsrRegisters active_{};
    CsrRegisters shadow_{};
    bool shadow_valid_ = false;
    bool start_pending_ = false;
};

}  // namespace gemmsim
