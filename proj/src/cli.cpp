#include <gemmsim/cli.hpp>

#include <gemmsim/ablation.hpp>
#include <gemmsim/errors.hpp>
#include <gemmsim/platform_config.hpp>
#include <gemmsim/report_io.hpp>
#include <gemmsim/sim_engine.hpp>
#include <gemmsim/workloads.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <thread>

namespace gemmsim {

namespace {

const std::vector<std::string> kConfigFields = {"mu",     "nu",    "ku",        "pa_bits", "pb_bits",
                                                "pc_bits", "stream_depth", "r_mem", "w_mem", "word_bits",
                                                "n_bank", "bank_depth", "freq_mhz"};

const std::vector<std::string> kBundledModels = {"resnet18", "mobilenet_v2", "vit_b16", "bert_base"};

// Options shared by every subcommand that needs a platform instance.
struct ConfigOptions {
    std::string path;
    std::map<std::string, std::string> fields;
    std::vector<std::string> sets;

    void attach(CLI::App& app) {
        app.add_option("--config", path, "Platform config file (key = value)");
        for (const auto& name : kConfigFields)
            app.add_option("--" + name, fields[name], "Override config field " + name);
        app.add_option("--set", sets, "Override as key=value (repeatable)");
    }

    ValidatedConfig load() const {
        PlatformConfig raw = path.empty() ? case_study_config() : load_config_file(path);
        std::map<std::string, std::string> overrides;
        for (const auto& [k, v] : fields)
            if (!v.empty()) overrides[k] = v;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ParseError("--set", 0, s, "expected key=value");
            overrides[s.substr(0, eq)] = s.substr(eq + 1);
        }
        apply_overrides(raw, overrides);
        return validate(raw);
    }
};

struct FlagOptions {
    int arch = 0;
    std::optional<bool> cpl;
    std::optional<bool> prefetch;
    std::uint32_t depth = 0;
    std::string layout;

    void attach(CLI::App& app) {
        app.add_option("--arch", arch, "Ablation architecture 1..4 (default: every mechanism on)")
            ->check(CLI::Range(1, 4));
        app.add_flag("--cpl,!--no-cpl", cpl, "Configuration pre-loading");
        app.add_flag("--prefetch,!--no-prefetch", prefetch, "Prefetch buffering");
        app.add_option("--depth", depth, "Buffer depth (default: stream_depth)")->check(CLI::PositiveNumber);
        app.add_option("--layout", layout, "Operand layout")->check(CLI::IsMember({"interleaved", "contiguous"}));
    }

    MechanismFlags build() const {
        MechanismFlags f = arch ? MechanismFlags::arch(arch, depth ? depth : 2) : MechanismFlags{};
        if (cpl) f.cpl = *cpl;
        if (prefetch) f.prefetch_buffering = *prefetch;
        if (depth) f.buffer_depth = depth;
        if (!layout.empty()) f.strided_layout = layout == "interleaved";
        return f;
    }
};

ResultMatrix reference_product(const OperandMatrix& a, const OperandMatrix& b, unsigned pc_bits) {
    ResultMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            std::int64_t s = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += std::int64_t{a(i, k)} * b(k, j);
            c(i, j) = wrap_to_bits(s, pc_bits);
        }
    return c;
}

void ensure_dir(const std::string& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& file) { return (std::filesystem::path(dir) / file).string(); }

void print_summary(std::ostream& out, const SimReport& r) {
    out << "jobs: " << r.jobs.size() << "\n"
        << "total_cycles: " << r.total_cycles << "\n"
        << "compute: " << r.cycles.compute << "  config: " << r.cycles.config
        << "  input_stall: " << r.cycles.input_stall << "  output_stall: " << r.cycles.output_stall
        << "  drain: " << r.cycles.drain << "\n"
        << "conflicts: " << r.conflict_count << "\n"
        << "su: " << format_fraction(r.su) << "  tu: " << format_fraction(r.tu) << "  ou: " << format_fraction(r.ou)
        << "\n"
        << "ops/compute-cycle: " << r.ops_per_compute_cycle << "  steady GOPS: " << r.steady_state_gops
        << "  achieved GOPS: " << r.achieved_gops << "\n";
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    ConfigOptions config;
    FlagOptions flags;
    std::uint32_t m = 0, k = 0, n = 0;
    std::size_t random_jobs = 0;
    std::uint32_t reps = 1;
    std::uint64_t seed = 1;
    std::string order = "mnk";
    std::string porting = "dual";
    std::uint32_t extra_csr_writes = 0;
    bool oracle_check = false;
    bool timing_only = false;
    std::string out_dir;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    const ValidatedConfig cfg = a.config.load();
    const MechanismFlags flags = a.flags.build();

    std::vector<GemmJob> parents;
    if (a.random_jobs) {
        parents = random_suite(a.seed, a.random_jobs);
    } else {
        if (!a.m || !a.k || !a.n) {
            err << "simulate: give --m, --k and --n, or --random <count>\n";
            return exit_code::usage_error;
        }
        parents.push_back(GemmJob{{a.m, a.k, a.n}});
    }
    const LoopOrder order = a.order == "nmk" ? LoopOrder::nmk : LoopOrder::mnk;

    SimOptions opts;
    opts.functional = !a.timing_only;
    opts.porting = a.porting == "single" ? BankPorting::single : BankPorting::dual;
    opts.extra_csr_writes = a.extra_csr_writes;

    std::mt19937_64 rng(a.seed ^ 0x5eedda7aULL);
    std::vector<JobInput> inputs;
    struct Expected {
        std::size_t first;
        std::size_t count;
        GemmJob parent;
        OperandMatrix a, b;
    };
    std::vector<Expected> expected;
    for (std::uint32_t r = 0; r < a.reps; ++r) {
        for (GemmJob job : parents) {
            job.order = order;
            job.rep = r;
            const std::vector<GemmJob> parts = auto_tile(cfg, job);
            if (opts.functional) {
                OperandMatrix am = random_operand(rng, job.dims.m, job.dims.k, cfg.raw().pa_bits);
                OperandMatrix bm = random_operand(rng, job.dims.k, job.dims.n, cfg.raw().pb_bits);
                auto sliced = slice_operands(parts, am, bm);
                expected.push_back({inputs.size(), sliced.size(), job, std::move(am), std::move(bm)});
                for (auto& s : sliced) inputs.push_back(std::move(s));
            } else {
                for (const auto& p : parts) inputs.push_back({p, {}, {}});
            }
        }
    }

    SimReport report = simulate(cfg, inputs, flags, opts);
    print_summary(out, report);

    int code = exit_code::ok;
    if (opts.functional) {
        bool pass = true;
        for (const auto& e : expected) {
            ResultMatrix c(e.parent.dims.m, e.parent.dims.n);
            for (std::size_t i = 0; i < e.count; ++i) place_result(c, report.jobs[e.first + i].job, report.jobs[e.first + i].result);
            const ResultMatrix want =
                a.oracle_check ? reference_product(e.a, e.b, cfg.raw().pc_bits) : run_functional(cfg, e.a, e.b, order);
            if (!(c == want)) pass = false;
        }
        out << (a.oracle_check ? "functional: " : "functional (array model): ") << (pass ? "PASS" : "FAIL") << "\n";
        if (!pass) code = exit_code::functional_mismatch;
    }

    if (!a.out_dir.empty()) {
        ensure_dir(a.out_dir);
        const Provenance prov{config_hash(cfg.raw()), a.seed};
        write_text_file(join(a.out_dir, "report.json"), report_json(report, cfg, flags, prov));
        write_text_file(join(a.out_dir, "jobs.csv"), report_jobs_csv(report, prov));
        out << "wrote " << join(a.out_dir, "report.json") << " and " << join(a.out_dir, "jobs.csv") << "\n";
    }
    return code;
}

// ---------------------------------------------------------------------------

struct AblationArgs {
    ConfigOptions config;
    std::uint64_t seed = 1;
    std::size_t n = 500;
    std::uint32_t reps = 10;
    unsigned workers = 0;
    std::string porting = "dual";
    std::string out_dir;
};

int cmd_ablation(const AblationArgs& a, std::ostream& out) {
    const ValidatedConfig cfg = a.config.load();
    AblationSettings settings;
    settings.seed = a.seed;
    settings.n_workloads = a.n;
    settings.reps = a.reps;
    settings.workers = a.workers;
    settings.options.porting = a.porting == "single" ? BankPorting::single : BankPorting::dual;
    const AblationResult res = ablation_sweep(cfg, settings);

    const Provenance prov{config_hash(cfg.raw()), a.seed};
    out << ablation_summary_csv(res, cfg, prov);
    if (!a.out_dir.empty()) {
        ensure_dir(a.out_dir);
        write_text_file(join(a.out_dir, "ablation_rows.csv"), ablation_rows_csv(res, prov));
        write_text_file(join(a.out_dir, "ablation_summary.csv"), ablation_summary_csv(res, cfg, prov));
        write_text_file(join(a.out_dir, "ablation.json"), ablation_json(res, cfg, prov));
        out << "wrote ablation_rows.csv, ablation_summary.csv, ablation.json to " << a.out_dir << "\n";
    }
    return exit_code::ok;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
    ConfigOptions config;
    FlagOptions flags;
    std::vector<std::string> models;
    std::string out_dir;
    unsigned workers = 0;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
    const ValidatedConfig cfg = a.config.load();
    const MechanismFlags flags = a.flags.build();

    std::vector<std::pair<std::string, std::string>> specs;  // name, path
    if (a.models.empty()) {
        for (const auto& m : kBundledModels) specs.emplace_back(m, std::string(GEMMSIM_DATA_DIR) + "/models/" + m + ".layers");
    } else {
        for (const auto& p : a.models) specs.emplace_back(std::filesystem::path(p).stem().string(), p);
    }

    // Parse everything up front so input errors surface before any simulation.
    std::vector<std::vector<GemmJob>> jobs;
    for (const auto& [name, path] : specs) jobs.push_back(load_model_spec(path, cfg));

    std::vector<BenchRow> rows(specs.size());
    std::vector<std::exception_ptr> errors(specs.size());
    auto run_one = [&](std::size_t i) {
        try {
            SimReport r = simulate_timing(cfg, jobs[i], flags);
            r.jobs.clear();
            rows[i] = BenchRow{specs[i].first, jobs[i].size(), total_macs(jobs[i]), std::move(r)};
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    const unsigned limit = a.workers ? a.workers : std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t i = 0; i < specs.size(); i += limit) {
        pool.clear();
        for (std::size_t j = i; j < std::min(specs.size(), i + limit); ++j) pool.emplace_back(run_one, j);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    // A model without any GeMM contributes no row.
    std::erase_if(rows, [](const BenchRow& r) { return r.jobs == 0; });
    out << bench_table(rows);
    if (!a.out_dir.empty()) {
        ensure_dir(a.out_dir);
        const Provenance prov{config_hash(cfg.raw()), 0};
        write_text_file(join(a.out_dir, "bench.csv"), bench_csv(rows, prov));
        write_text_file(join(a.out_dir, "bench.json"), bench_json(rows, cfg, flags, prov));
        out << "wrote bench.csv and bench.json to " << a.out_dir << "\n";
    }
    return exit_code::ok;
}

// ---------------------------------------------------------------------------

int cmd_validate(const ConfigOptions& c, std::ostream& out) {
    const ValidatedConfig cfg = c.load();
    const PlatformConfig& r = cfg.raw();
    out << "valid\n"
        << "array: " << r.mu << "x" << r.ku << "x" << r.nu << "\n"
        << "capacity: " << format_capacity(cfg.capacity_bytes()) << "\n"
        << "peak: " << cfg.peak_ops_per_cycle() << " ops/cycle, " << peak_gops(cfg) << " GOPS at " << r.freq_mhz
        << " MHz\n"
        << "read bandwidth: " << cfg.read_bits_needed() << " of " << std::uint64_t{r.r_mem} * r.word_bits
        << " bits/cycle\n"
        << "write bandwidth: " << cfg.write_bits_needed() << " of " << std::uint64_t{r.w_mem} * r.word_bits
        << " bits/cycle\n"
        << "config_hash: " << config_hash(r) << "\n";
    return exit_code::ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cycle-level GeMM accelerator simulator and utilization analyzer", "gemmsim"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate one job (optionally repeated) or a random suite");
    sim.config.attach(*simulate_cmd);
    sim.flags.attach(*simulate_cmd);
    simulate_cmd->add_option("--m", sim.m, "Rows of A and C")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--k", sim.k, "Reduction dimension")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--n", sim.n, "Columns of B and C")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--random", sim.random_jobs, "Simulate a seeded random suite of this many jobs");
    simulate_cmd->add_option("--reps", sim.reps, "Run the job list this many times back to back")
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--seed", sim.seed, "Seed for random jobs and operands");
    simulate_cmd->add_option("--order", sim.order, "Outer loop order")->check(CLI::IsMember({"mnk", "nmk"}));
    simulate_cmd->add_option("--porting", sim.porting, "SPM bank ports")->check(CLI::IsMember({"dual", "single"}));
    simulate_cmd->add_option("--extra-csr-writes", sim.extra_csr_writes, "Additional CSR writes per job");
    simulate_cmd->add_flag("--oracle-check", sim.oracle_check, "Compare C against a naive triple loop");
    simulate_cmd->add_flag("--timing-only", sim.timing_only, "Skip data movement");
    simulate_cmd->add_option("--out", sim.out_dir, "Directory for report.json and jobs.csv");

    AblationArgs abl;
    auto* ablation_cmd = app.add_subcommand("ablation", "Mechanism ablation over a seeded random suite");
    abl.config.attach(*ablation_cmd);
    ablation_cmd->add_option("--seed", abl.seed, "Suite seed");
    ablation_cmd->add_option("--n", abl.n, "Number of workloads")->check(CLI::PositiveNumber);
    ablation_cmd->add_option("--reps", abl.reps, "Back-to-back repetitions per workload")->check(CLI::PositiveNumber);
    ablation_cmd->add_option("--workers", abl.workers, "Worker threads (0: all cores)");
    ablation_cmd->add_option("--porting", abl.porting, "SPM bank ports")->check(CLI::IsMember({"dual", "single"}));
    ablation_cmd->add_option("--out", abl.out_dir, "Directory for the CSV and JSON outputs");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Utilization table for DNN layer files");
    bench.config.attach(*bench_cmd);
    bench.flags.attach(*bench_cmd);
    bench_cmd->add_option("--model", bench.models, "Layer file (repeatable; default: the four bundled models)")
        ->check(CLI::ExistingFile);
    bench_cmd->add_option("--workers", bench.workers, "Models simulated in parallel (0: all cores)");
    bench_cmd->add_option("--out", bench.out_dir, "Directory for bench.csv and bench.json");

    ConfigOptions vc;
    auto* validate_cmd = app.add_subcommand("validate-config", "Check a platform config and print derived values");
    vc.attach(*validate_cmd);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_code::ok : exit_code::usage_error;
    }

    try {
        if (*simulate_cmd) return cmd_simulate(sim, out, err);
        if (*ablation_cmd) return cmd_ablation(abl, out);
        if (*bench_cmd) return cmd_bench(bench, out);
        if (*validate_cmd) return cmd_validate(vc, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_code::usage_error;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return exit_code::usage_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::runtime_error;
    }
    return exit_code::usage_error;
}

}  // namespace gemmsim
