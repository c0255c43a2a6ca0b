#include <gemmsim/ablation.hpp>

#include <gemmsim/workloads.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace gemmsim {

std::vector<AblationVariant> default_variants() {
    return {
        {"arch1", MechanismFlags::arch(1)},    {"arch2", MechanismFlags::arch(2)},
        {"arch3", MechanismFlags::arch(3, 2)}, {"arch4", MechanismFlags::arch(4, 2)},
        {"arch4_d3", MechanismFlags::arch(4, 3)}, {"arch4_d4", MechanismFlags::arch(4, 4)},
    };
}

double quantile(std::span<const double> sorted, double p) noexcept {
    if (sorted.empty()) return 0.0;
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::vector<double> values) {
    Summary s;
    s.n = values.size();
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    return s;
}

namespace {

struct TaskResult {
    std::vector<AblationRow> rows;
    double ou = 0.0;
};

TaskResult run_task(const ValidatedConfig& cfg, const AblationSettings& settings, std::uint32_t variant,
                    const MechanismFlags& flags, const GemmJob& workload, std::uint32_t index) {
    const std::vector<GemmJob> parts = auto_tile(cfg, workload);
    std::vector<GemmJob> jobs;
    jobs.reserve(parts.size() * settings.reps);
    for (std::uint32_t r = 0; r < settings.reps; ++r) {
        for (GemmJob p : parts) {
            p.rep = r;
            jobs.push_back(p);
        }
    }
    SimOptions opts = settings.options;
    opts.functional = false;
    const SimReport report = simulate_timing(cfg, jobs, flags, opts);

    TaskResult out;
    out.rows.resize(settings.reps);
    for (std::uint32_t r = 0; r < settings.reps; ++r) {
        AblationRow& row = out.rows[r];
        row.variant = variant;
        row.workload = index;
        row.rep = r;
        row.dims = workload.dims;
        row.sub_jobs = static_cast<std::uint32_t>(parts.size());
    }
    std::vector<std::uint64_t> useful(settings.reps, 0), padded(settings.reps, 0);
    for (const JobRecord& rec : report.jobs) {
        AblationRow& row = out.rows[rec.job.rep];
        row.cycles += rec.cycles.total();
        row.ideal_cycles += rec.ideal_cycles;
        row.conflicts += rec.conflicts;
        useful[rec.job.rep] += rec.useful_macs;
        padded[rec.job.rep] += rec.padded_macs;
    }
    for (std::uint32_t r = 0; r < settings.reps; ++r) {
        const Utilization u = utilization(useful[r], padded[r], out.rows[r].ideal_cycles, out.rows[r].cycles);
        out.rows[r].su = u.su;
        out.rows[r].tu = u.tu;
        out.rows[r].ou = u.ou;
    }
    out.ou = report.ou;
    return out;
}

}  // namespace

AblationResult ablation_sweep(const ValidatedConfig& cfg, const AblationSettings& settings,
                              std::vector<AblationVariant> variants) {
    AblationResult result;
    result.settings = settings;
    result.variants = std::move(variants);
    result.workloads = random_suite(settings.seed, settings.n_workloads);

    const std::size_t n_var = result.variants.size();
    const std::size_t n_wl = result.workloads.size();
    std::vector<TaskResult> tasks(n_var * n_wl);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t t; (t = next.fetch_add(1)) < tasks.size();) {
            try {
                const auto v = static_cast<std::uint32_t>(t / n_wl);
                const auto w = static_cast<std::uint32_t>(t % n_wl);
                tasks[t] = run_task(cfg, settings, v, result.variants[v].flags, result.workloads[w], w);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = tasks.size();
            }
        }
    };
    unsigned n_threads = settings.workers ? settings.workers : std::max(1u, std::thread::hardware_concurrency());
    n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, std::max<std::size_t>(tasks.size(), 1)));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    result.workload_ou.assign(n_var, std::vector<double>(n_wl, 0.0));
    result.rows.reserve(tasks.size() * settings.reps);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        result.workload_ou[t / n_wl][t % n_wl] = tasks[t].ou;
        for (const auto& row : tasks[t].rows) result.rows.push_back(row);
    }
    for (const auto& ou : result.workload_ou) result.summaries.push_back(summarize(ou));
    return result;
}

}  // namespace gemmsim
