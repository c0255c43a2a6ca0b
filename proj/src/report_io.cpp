#include <gemmsim/report_io.hpp>

#include <gemmsim/errors.hpp>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace gemmsim {

using nlohmann::ordered_json;

namespace {

ordered_json config_json(const ValidatedConfig& cfg) {
    const PlatformConfig& c = cfg.raw();
    return ordered_json{{"mu", c.mu},
                        {"nu", c.nu},
                        {"ku", c.ku},
                        {"pa_bits", c.pa_bits},
                        {"pb_bits", c.pb_bits},
                        {"pc_bits", c.pc_bits},
                        {"stream_depth", c.stream_depth},
                        {"r_mem", c.r_mem},
                        {"w_mem", c.w_mem},
                        {"word_bits", c.word_bits},
                        {"n_bank", c.n_bank},
                        {"bank_depth", c.bank_depth},
                        {"freq_mhz", c.freq_mhz},
                        {"capacity_bytes", cfg.capacity_bytes()},
                        {"peak_ops_per_cycle", cfg.peak_ops_per_cycle()}};
}

ordered_json flags_json(const MechanismFlags& f, const ValidatedConfig& cfg) {
    return ordered_json{{"cpl", f.cpl},
                        {"prefetch_buffering", f.prefetch_buffering},
                        {"buffer_depth", f.effective_depth(cfg)},
                        {"strided_layout", f.strided_layout}};
}

ordered_json cycles_json(const CycleBreakdown& c) {
    return ordered_json{{"compute", c.compute},
                        {"config", c.config},
                        {"input_stall", c.input_stall},
                        {"output_stall", c.output_stall},
                        {"drain", c.drain}};
}

ordered_json summary_json(const SimReport& r) {
    return ordered_json{{"total_cycles", r.total_cycles},
                        {"cycles", cycles_json(r.cycles)},
                        {"conflict_count", r.conflict_count},
                        {"ideal_cycles", r.ideal_cycles},
                        {"useful_macs", r.useful_macs},
                        {"padded_macs", r.padded_macs},
                        {"ops_executed", r.ops_executed},
                        {"max_stall_retries", r.max_stall_retries},
                        {"su", r.su},
                        {"tu", r.tu},
                        {"ou", r.ou},
                        {"ops_per_compute_cycle", r.ops_per_compute_cycle},
                        {"steady_state_gops", r.steady_state_gops},
                        {"achieved_gops", r.achieved_gops}};
}

template <typename T, typename... Rest>
void csv_join(std::ostringstream& out, const T& first, const Rest&... rest) {
    out << first;
    if constexpr (sizeof...(rest) > 0) {
        out << ',';
        csv_join(out, rest...);
    }
}

}  // namespace

std::string format_fraction(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string report_json(const SimReport& r, const ValidatedConfig& cfg, const MechanismFlags& flags,
                        const Provenance& prov, bool include_jobs) {
    ordered_json j;
    j["config_hash"] = prov.config_hash;
    j["seed"] = prov.seed;
    j["config"] = config_json(cfg);
    j["flags"] = flags_json(flags, cfg);
    j["report"] = summary_json(r);
    if (include_jobs) {
        auto& jobs = j["jobs"] = ordered_json::array();
        for (const auto& rec : r.jobs) {
            const Utilization u = utilization(rec.useful_macs, rec.padded_macs, rec.ideal_cycles, rec.cycles.total());
            jobs.push_back(ordered_json{{"m", rec.job.dims.m},
                                        {"k", rec.job.dims.k},
                                        {"n", rec.job.dims.n},
                                        {"workload", rec.job.workload},
                                        {"rep", rec.job.rep},
                                        {"part", rec.job.part},
                                        {"layout", to_string(rec.layout)},
                                        {"csr_writes", rec.csr_writes},
                                        {"window_begin", rec.window_begin},
                                        {"start_cycle", rec.start_cycle},
                                        {"end_cycle", rec.end_cycle},
                                        {"cycles", cycles_json(rec.cycles)},
                                        {"conflicts", rec.conflicts},
                                        {"ideal_cycles", rec.ideal_cycles},
                                        {"su", u.su},
                                        {"tu", u.tu},
                                        {"ou", u.ou}});
        }
    }
    return j.dump(2) + "\n";
}

std::string report_jobs_csv(const SimReport& r, const Provenance& prov) {
    std::ostringstream out;
    out << "config_hash,seed,job,workload,rep,part,m,k,n,layout,csr_writes,start_cycle,end_cycle,cycles,"
           "compute,config,input_stall,output_stall,drain,conflicts,ideal_cycles,su,tu,ou\n";
    for (std::size_t i = 0; i < r.jobs.size(); ++i) {
        const auto& rec = r.jobs[i];
        const Utilization u = utilization(rec.useful_macs, rec.padded_macs, rec.ideal_cycles, rec.cycles.total());
        csv_join(out, prov.config_hash, prov.seed, i, rec.job.workload, rec.job.rep, rec.job.part, rec.job.dims.m,
                 rec.job.dims.k, rec.job.dims.n, to_string(rec.layout), rec.csr_writes, rec.start_cycle, rec.end_cycle,
                 rec.cycles.total(), rec.cycles.compute, rec.cycles.config, rec.cycles.input_stall,
                 rec.cycles.output_stall, rec.cycles.drain, rec.conflicts, rec.ideal_cycles, format_fraction(u.su),
                 format_fraction(u.tu), format_fraction(u.ou));
        out << '\n';
    }
    return out.str();
}

std::string ablation_rows_csv(const AblationResult& res, const Provenance& prov) {
    std::ostringstream out;
    out << "config_hash,seed,variant,workload,rep,m,k,n,sub_jobs,cycles,ideal_cycles,conflicts,su,tu,ou\n";
    for (const auto& row : res.rows) {
        csv_join(out, prov.config_hash, prov.seed, res.variants[row.variant].name, row.workload, row.rep, row.dims.m,
                 row.dims.k, row.dims.n, row.sub_jobs, row.cycles, row.ideal_cycles, row.conflicts,
                 format_fraction(row.su), format_fraction(row.tu), format_fraction(row.ou));
        out << '\n';
    }
    return out.str();
}

std::string ablation_summary_csv(const AblationResult& res, const ValidatedConfig& cfg, const Provenance& prov) {
    std::ostringstream out;
    out << "config_hash,seed,variant,cpl,prefetch,depth,layout,n,min,q1,median,q3,max,iqr,mean\n";
    for (std::size_t v = 0; v < res.variants.size(); ++v) {
        const auto& f = res.variants[v].flags;
        const Summary& s = res.summaries[v];
        csv_join(out, prov.config_hash, prov.seed, res.variants[v].name, int{f.cpl}, int{f.prefetch_buffering},
                 f.effective_depth(cfg), f.strided_layout ? "interleaved" : "contiguous", s.n, format_fraction(s.min),
                 format_fraction(s.q1), format_fraction(s.median), format_fraction(s.q3), format_fraction(s.max),
                 format_fraction(s.iqr()), format_fraction(s.mean));
        out << '\n';
    }
    return out.str();
}

std::string ablation_json(const AblationResult& res, const ValidatedConfig& cfg, const Provenance& prov) {
    ordered_json j;
    j["config_hash"] = prov.config_hash;
    j["seed"] = prov.seed;
    j["config"] = config_json(cfg);
    j["n_workloads"] = res.settings.n_workloads;
    j["reps"] = res.settings.reps;
    auto& vars = j["variants"] = ordered_json::array();
    for (std::size_t v = 0; v < res.variants.size(); ++v) {
        const Summary& s = res.summaries[v];
        vars.push_back(ordered_json{{"name", res.variants[v].name},
                                    {"flags", flags_json(res.variants[v].flags, cfg)},
                                    {"median", s.median},
                                    {"q1", s.q1},
                                    {"q3", s.q3},
                                    {"min", s.min},
                                    {"max", s.max},
                                    {"iqr", s.iqr()},
                                    {"mean", s.mean}});
    }
    if (res.summaries.size() >= 4 && res.summaries[0].median > 0) {
        j["median_gain_2_over_1"] = res.summaries[1].median / res.summaries[0].median;
        j["median_gain_3_over_2"] = res.summaries[2].median / res.summaries[1].median;
        j["median_gain_4_over_3"] = res.summaries[3].median / res.summaries[2].median;
        j["median_gain_4_over_1"] = res.summaries[3].median / res.summaries[0].median;
    }
    return j.dump(2) + "\n";
}

std::string bench_csv(const std::vector<BenchRow>& rows, const Provenance& prov) {
    std::ostringstream out;
    out << "config_hash,seed,model,jobs,macs,su,tu,ou,cycles,compute,config,input_stall,output_stall,drain,conflicts\n";
    for (const auto& row : rows) {
        const SimReport& r = row.report;
        csv_join(out, prov.config_hash, prov.seed, row.model, row.jobs, row.macs, format_fraction(r.su),
                 format_fraction(r.tu), format_fraction(r.ou), r.total_cycles, r.cycles.compute, r.cycles.config,
                 r.cycles.input_stall, r.cycles.output_stall, r.cycles.drain, r.conflict_count);
        out << '\n';
    }
    return out.str();
}

std::string bench_json(const std::vector<BenchRow>& rows, const ValidatedConfig& cfg, const MechanismFlags& flags,
                       const Provenance& prov) {
    ordered_json j;
    j["config_hash"] = prov.config_hash;
    j["seed"] = prov.seed;
    j["config"] = config_json(cfg);
    j["flags"] = flags_json(flags, cfg);
    auto& models = j["models"] = ordered_json::array();
    for (const auto& row : rows)
        models.push_back(ordered_json{{"model", row.model}, {"jobs", row.jobs}, {"macs", row.macs},
                                      {"report", summary_json(row.report)}});
    return j.dump(2) + "\n";
}

std::string bench_table(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %8s %8s %8s %14s\n", "Model", "SU(%)", "TU(%)", "OU(%)", "CC(cycles)");
    out << buf;
    for (const auto& row : rows) {
        const SimReport& r = row.report;
        std::snprintf(buf, sizeof buf, "%-16s %8.2f %8.2f %8.2f %14.3e\n", row.model.c_str(), 100.0 * r.su,
                      100.0 * r.tu, 100.0 * r.ou, static_cast<double>(r.total_cycles));
        out << buf;
    }
    return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
    if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace gemmsim
