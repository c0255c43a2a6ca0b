#pragma once

#include <gemmsim/platform_config.hpp>
#include <gemmsim/sim_engine.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gemmsim {

struct AblationVariant {
    std::string name;
    MechanismFlags flags;
};

/// arch1..arch4 at depth 2, then arch4 at depths 3 and 4.
std::vector<AblationVariant> default_variants();

struct AblationSettings {
    std::uint64_t seed = 1;
    std::size_t n_workloads = 500;
    std::uint32_t reps = 10;
    unsigned workers = 0;  // 0: hardware concurrency
    SimOptions options{.functional = false};
};

/// One repetition of one workload under one variant.
struct AblationRow {
    std::uint32_t variant = 0;
    std::uint32_t workload = 0;
    std::uint32_t rep = 0;
    GemmDims dims;
    std::uint32_t sub_jobs = 0;
    std::uint64_t cycles = 0;
    std::uint64_t ideal_cycles = 0;
    std::uint64_t conflicts = 0;
    double su = 0.0;
    double tu = 0.0;
    double ou = 0.0;
};

struct Summary {
    std::size_t n = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double mean = 0.0;

    double iqr() const noexcept { return q3 - q1; }
};

/// Linear interpolation between order statistics (h = (n - 1) p).
double quantile(std::span<const double> sorted, double p) noexcept;
Summary summarize(std::vector<double> values);

struct AblationResult {
    AblationSettings settings;
    std::vector<AblationVariant> variants;
    std::vector<GemmJob> workloads;
    std::vector<AblationRow> rows;                // sorted by variant, workload, rep
    std::vector<std::vector<double>> workload_ou;  // [variant][workload], all reps pooled
    std::vector<Summary> summaries;                // per variant
};

/// Every workload runs `reps` times back to back on a fresh accelerator, so
/// CPL can hide configuration after the first repetition.
AblationResult ablation_sweep(const ValidatedConfig& cfg, const AblationSettings& settings,
                              std::vector<AblationVariant> variants = default_variants());

}  // namespace gemmsim
