#pragma once

#include <gemmsim/job.hpp>
#include <gemmsim/matrix.hpp>
#include <gemmsim/platform_config.hpp>
#include <gemmsim/spm.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gemmsim {

/// Utilization-enhancement mechanisms that can be switched off.
///
/// Without prefetch_buffering the streamers run on demand: depth-1 FIFO and
/// output buffer, and a fetch starts only once the core has asked for it.
struct MechanismFlags {
    bool cpl = true;
    bool prefetch_buffering = true;
    std::uint32_t buffer_depth = 0;  // 0: the config's stream_depth
    bool strided_layout = true;      // honour the job's layout; false forces contiguous

    // Ablation architectures 1..4: none, +CPL, +buffering (depth 2), +layout.
    static MechanismFlags arch(int variant, std::uint32_t depth = 2);

    std::uint32_t effective_depth(const ValidatedConfig& cfg) const noexcept;
    bool operator==(const MechanismFlags&) const = default;
};

struct SimOptions {
    bool functional = true;  // move real data; false simulates timing only
    BankPorting porting = BankPorting::dual;
    std::uint32_t extra_csr_writes = 0;
    bool record_emits = false;
    std::uint64_t watchdog_cycles = 1'000'000;  // cycles without progress before giving up
};

struct JobInput {
    GemmJob job;
    OperandMatrix a;  // M x K; unused when timing only
    OperandMatrix b;  // K x N
};

struct CycleBreakdown {
    std::uint64_t compute = 0;
    std::uint64_t config = 0;        // accelerator idle: host writes, commit
    std::uint64_t input_stall = 0;
    std::uint64_t output_stall = 0;
    std::uint64_t drain = 0;         // core finished, results still being written

    std::uint64_t total() const noexcept { return compute + config + input_stall + output_stall + drain; }
    CycleBreakdown& operator+=(const CycleBreakdown& o) noexcept;
    bool operator==(const CycleBreakdown&) const = default;
};

struct JobRecord {
    GemmJob job;
    Layout layout = Layout::contiguous;  // effective
    std::uint32_t csr_writes = 0;
    std::uint64_t window_begin = 0;      // first cycle charged to this job
    std::uint64_t start_cycle = 0;
    std::uint64_t end_cycle = 0;         // last writeback grant
    CycleBreakdown cycles;
    std::uint64_t conflicts = 0;         // stalled word requests
    std::uint64_t ideal_cycles = 0;
    std::uint64_t useful_macs = 0;
    std::uint64_t padded_macs = 0;
    std::vector<std::uint64_t> emits;    // compute ordinal of every emit, if recorded
    ResultMatrix result;                 // empty when timing only
};

struct Utilization {
    double su = 0.0;
    double tu = 0.0;
    double ou = 0.0;
};

struct SimReport {
    std::uint64_t total_cycles = 0;
    CycleBreakdown cycles;
    std::uint64_t conflict_count = 0;
    std::uint64_t ideal_cycles = 0;
    std::uint64_t useful_macs = 0;
    std::uint64_t padded_macs = 0;
    std::uint64_t ops_executed = 0;       // 2 per useful MAC
    std::uint32_t max_stall_retries = 0;  // longest wait of any single tile fetch
    double su = 0.0;
    double tu = 0.0;
    double ou = 0.0;
    double ops_per_compute_cycle = 0.0;   // steady-state rate
    double steady_state_gops = 0.0;
    double achieved_gops = 0.0;           // over the whole window
    std::vector<JobRecord> jobs;
};

double spatial_utilization(const ValidatedConfig& cfg, GemmDims dims) noexcept;

/// su = useful / padded MACs, tu = ideal / total cycles, ou = su * tu.
Utilization utilization(std::uint64_t useful_macs, std::uint64_t padded_macs, std::uint64_t ideal_cycles,
                        std::uint64_t total_cycles) noexcept;
Utilization metrics(const SimReport& report) noexcept;

/// Runs the jobs back to back on one accelerator instance. The window starts
/// at the first CSR write and ends at the last writeback grant.
SimReport simulate(const ValidatedConfig& cfg, std::span<const JobInput> jobs, const MechanismFlags& flags,
                   const SimOptions& options = {});

/// Timing-only convenience overload.
SimReport simulate_timing(const ValidatedConfig& cfg, std::span<const GemmJob> jobs, const MechanismFlags& flags,
                          SimOptions options = {});

}  // namespace gemmsim
