#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace gemmsim {

/// Design-time parameters of one generated platform instance.
///
/// Defaults are the 8x8x8 int8 case-study instance: 16 read and 32 write
/// ports of 64 bits into 32 banks of 1056 words.
struct PlatformConfig {
    std::uint32_t mu = 8;  // array rows
    std::uint32_t nu = 8;  // array columns
    std::uint32_t ku = 8;  // DotProd vector length
    std::uint32_t pa_bits = 8;
    std::uint32_t pb_bits = 8;
    std::uint32_t pc_bits = 32;
    std::uint32_t stream_depth = 3;
    std::uint32_t r_mem = 16;
    std::uint32_t w_mem = 32;
    std::uint32_t word_bits = 64;
    std::uint32_t n_bank = 32;
    std::uint32_t bank_depth = 1056;
    double freq_mhz = 200.0;  // reporting only

    bool operator==(const PlatformConfig&) const = default;
};

/// A PlatformConfig that passed validate(), with derived capacities.
///
/// Tile geometry: every tile row is padded to whole SPM words, so an A' tile
/// occupies mu * a_row_words consecutive port words, B' ku * b_row_words and
/// C' mu * c_row_words.
class ValidatedConfig {
public:
    const PlatformConfig& raw() const noexcept { return raw_; }

    std::uint32_t mu() const noexcept { return raw_.mu; }
    std::uint32_t nu() const noexcept { return raw_.nu; }
    std::uint32_t ku() const noexcept { return raw_.ku; }
    std::uint32_t word_bytes() const noexcept { return raw_.word_bits / 8; }
    std::uint64_t capacity_bytes() const noexcept { return capacity_bytes_; }
    std::uint64_t capacity_words() const noexcept {
        return static_cast<std::uint64_t>(raw_.n_bank) * raw_.bank_depth;
    }
    std::uint64_t peak_ops_per_cycle() const noexcept { return peak_ops_; }

    std::uint32_t a_row_words() const noexcept { return a_row_words_; }
    std::uint32_t b_row_words() const noexcept { return b_row_words_; }
    std::uint32_t c_row_words() const noexcept { return c_row_words_; }
    std::uint32_t a_tile_words() const noexcept { return raw_.mu * a_row_words_; }
    std::uint32_t b_tile_words() const noexcept { return raw_.ku * b_row_words_; }
    std::uint32_t c_tile_words() const noexcept { return raw_.mu * c_row_words_; }

    // Required bits per cycle for one A' plus one B' tile, and per C' tile.
    std::uint64_t read_bits_needed() const noexcept;
    std::uint64_t write_bits_needed() const noexcept;

    // Copy with a different buffer depth, re-validated.
    ValidatedConfig with_stream_depth(std::uint32_t depth) const;

    bool operator==(const ValidatedConfig& o) const noexcept { return raw_ == o.raw_; }

private:
    friend ValidatedConfig validate(const PlatformConfig& raw);
    explicit ValidatedConfig(const PlatformConfig& raw);

    PlatformConfig raw_;
    std::uint64_t capacity_bytes_ = 0;
    std::uint64_t peak_ops_ = 0;
    std::uint32_t a_row_words_ = 0;
    std::uint32_t b_row_words_ = 0;
    std::uint32_t c_row_words_ = 0;
};

/// Throws ZeroParamError, PrecisionError or BandwidthError naming the
/// violated rule.
ValidatedConfig validate(const PlatformConfig& raw);
inline ValidatedConfig validate(const ValidatedConfig& cfg) { return validate(cfg.raw()); }

/// 2 * mu * ku * nu: one multiply and one add per MAC.
std::uint64_t peak_ops_per_cycle(const ValidatedConfig& cfg) noexcept;

/// ops/cycle * MHz / 1000.
double peak_gops(const ValidatedConfig& cfg) noexcept;

PlatformConfig case_study_config();

// Config files are "key = value" lines using the PlatformConfig field names;
// '#' starts a comment and unspecified keys keep their defaults.
PlatformConfig parse_config_text(std::string_view text, const std::string& source = "<config>",
                                 PlatformConfig base = {});
PlatformConfig load_config_file(const std::string& path);

// Applies overrides by field name; unknown names are a ParseError.
void apply_overrides(PlatformConfig& cfg, const std::map<std::string, std::string>& overrides);

// Canonical text form; parse_config_text(to_config_text(c)) == c.
std::string to_config_text(const PlatformConfig& cfg);

// FNV-1a 64 of the canonical text, rendered as 16 hex digits.
std::string config_hash(const PlatformConfig& cfg);

// 270336 -> "270336 B (264.00 KiB, 270.34 kB)"
std::string format_capacity(std::uint64_t bytes);

}  // namespace gemmsim
