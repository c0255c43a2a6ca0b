#pragma once

#include <gemmsim/platform_config.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gemmsim {

struct BankAddress {
    std::uint32_t bank = 0;
    std::uint32_t row = 0;

    bool operator==(const BankAddress&) const = default;
};

/// Low-order word interleaving: consecutive words land in consecutive banks.
/// Throws MisalignedError / OutOfRangeError.
BankAddress map_address(const ValidatedConfig& cfg, std::uint64_t addr);

enum class AccessKind : std::uint8_t { read, write };

struct MemRequest {
    AccessKind kind = AccessKind::read;
    std::uint64_t addr = 0;       // byte address, word aligned
    std::uint32_t requester = 0;  // streamer port id; lower ids win among reads
    std::uint32_t tag = 0;        // opaque to the SPM, returned with grants
};

/// Per-bank port model. `dual` gives every bank one read and one write port,
/// `single` one port shared by both kinds.
enum class BankPorting : std::uint8_t { dual, single };

struct Arbitration {
    std::vector<std::uint32_t> granted;  // indices into the request list
    std::vector<std::uint32_t> stalled;

    void clear() noexcept {
        granted.clear();
        stalled.clear();
    }
};

/// Multi-banked scratchpad. Reads observe memory as of the start of the
/// cycle; staged writes become visible after commit_writes().
class Spm {
public:
    explicit Spm(const ValidatedConfig& cfg, BankPorting porting = BankPorting::dual);

    const ValidatedConfig& config() const noexcept { return cfg_; }
    BankPorting porting() const noexcept { return porting_; }
    std::uint64_t capacity() const noexcept { return memory_.size(); }
    std::uint32_t word_bytes() const noexcept { return word_bytes_; }

    BankAddress map_address(std::uint64_t addr) const { return gemmsim::map_address(cfg_, addr); }

    /// One cycle of arbitration. Writes are considered first, then reads in
    /// ascending requester order; each bank port grants at most one request.
    void arbitrate(std::span<const MemRequest> requests, Arbitration& out);
    Arbitration arbitrate(std::span<const MemRequest> requests) {
        Arbitration a;
        arbitrate(requests, a);
        return a;
    }

    std::span<const std::uint8_t> read_word(std::uint64_t addr) const noexcept {
        return {memory_.data() + addr, word_bytes_};
    }
    void stage_write(std::uint64_t addr, std::span<const std::uint8_t> word);
    void commit_writes();

    // Backdoor access for loading operands and reading results.
    std::span<std::uint8_t> bytes() noexcept { return memory_; }
    std::span<const std::uint8_t> bytes() const noexcept { return memory_; }
    void clear() noexcept;

    std::uint64_t total_granted() const noexcept { return total_granted_; }
    std::uint64_t total_stalled() const noexcept { return total_stalled_; }

    // Flat image: 32-byte header (magic "GSPM", version, capacity, word size,
    // bank count, bank depth) followed by the raw bytes, little endian.
    void save_image(const std::string& path) const;
    void load_image(const std::string& path);

private:
    ValidatedConfig cfg_;
    BankPorting porting_;
    std::uint32_t word_bytes_;
    std::vector<std::uint8_t> memory_;

    std::vector<std::uint64_t> read_stamp_;
    std::vector<std::uint64_t> write_stamp_;
    std::uint64_t epoch_ = 0;
    std::uint32_t n_bank_;
    std::uint32_t word_shift_ = 0;
    std::uint64_t bank_mask_ = 0;  // n_bank - 1 when n_bank is a power of two
    std::vector<std::uint32_t> order_;

    struct StagedWrite {
        std::uint64_t addr;
        std::uint32_t offset;
    };
    std::vector<StagedWrite> staged_;
    std::vector<std::uint8_t> staged_data_;

    std::uint64_t total_granted_ = 0;
    std::uint64_t total_stalled_ = 0;
};

}  // namespace gemmsim
