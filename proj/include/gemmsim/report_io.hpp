#pragma once

#include <gemmsim/ablation.hpp>
#include <gemmsim/platform_config.hpp>
#include <gemmsim/sim_engine.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace gemmsim {

// Every artifact carries the config hash and the seed that produced it.
struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
};

// Fixed-precision rendering used in every CSV column.
std::string format_fraction(double v);

std::string report_json(const SimReport& report, const ValidatedConfig& cfg, const MechanismFlags& flags,
                        const Provenance& prov, bool include_jobs = true);

// Columns: config_hash,seed,job,workload,rep,part,m,k,n,layout,csr_writes,start_cycle,end_cycle,cycles,
// compute,config,input_stall,output_stall,drain,conflicts,ideal_cycles,su,tu,ou
std::string report_jobs_csv(const SimReport& report, const Provenance& prov);

// Columns: config_hash,seed,variant,workload,rep,m,k,n,sub_jobs,cycles,ideal_cycles,conflicts,su,tu,ou
std::string ablation_rows_csv(const AblationResult& result, const Provenance& prov);

// Columns: config_hash,seed,variant,cpl,prefetch,depth,layout,n,min,q1,median,q3,max,iqr,mean
std::string ablation_summary_csv(const AblationResult& result, const ValidatedConfig& cfg, const Provenance& prov);

std::string ablation_json(const AblationResult& result, const ValidatedConfig& cfg, const Provenance& prov);

struct BenchRow {
    std::string model;
    std::uint64_t jobs = 0;
    std::uint64_t macs = 0;
    SimReport report;  // jobs list dropped
};

// Columns: config_hash,seed,model,jobs,macs,su,tu,ou,cycles,compute,config,input_stall,output_stall,drain,conflicts
std::string bench_csv(const std::vector<BenchRow>& rows, const Provenance& prov);
std::string bench_json(const std::vector<BenchRow>& rows, const ValidatedConfig& cfg, const MechanismFlags& flags,
                       const Provenance& prov);

/// Human-readable SU/TU/OU/CC table, percentages with two decimals.
std::string bench_table(const std::vector<BenchRow>& rows);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace gemmsim
