#include <gemmsim/sim_engine.hpp>

#include <gemmsim/csr_host.hpp>
#include <gemmsim/errors.hpp>
#include <gemmsim/gemm_core.hpp>
#include <gemmsim/streamer.hpp>

#include <algorithm>
#include <optional>

namespace gemmsim {

MechanismFlags MechanismFlags::arch(int variant, std::uint32_t depth) {
    switch (variant) {
        case 1: return {false, false, 0, false};
        case 2: return {true, false, 0, false};
        case 3: return {true, true, depth, false};
        case 4: return {true, true, depth, true};
        default: throw Error("architecture variant must be 1..4, got " + std::to_string(variant));
    }
}

std::uint32_t MechanismFlags::effective_depth(const ValidatedConfig& cfg) const noexcept {
    if (!prefetch_buffering) return 1;
    return buffer_depth ? buffer_depth : cfg.raw().stream_depth;
}

CycleBreakdown& CycleBreakdown::operator+=(const CycleBreakdown& o) noexcept {
    compute += o.compute;
    config += o.config;
    input_stall += o.input_stall;
    output_stall += o.output_stall;
    drain += o.drain;
    return *this;
}

double spatial_utilization(const ValidatedConfig& cfg, GemmDims dims) noexcept {
    const auto pad = [](std::uint64_t x, std::uint64_t u) { return (x + u - 1) / u * u; };
    const double padded = static_cast<double>(pad(dims.m, cfg.mu()) * pad(dims.k, cfg.ku()) * pad(dims.n, cfg.nu()));
    return static_cast<double>(dims.macs()) / padded;
}

Utilization utilization(std::uint64_t useful_macs, std::uint64_t padded_macs, std::uint64_t ideal_cycles,
                        std::uint64_t total_cycles) noexcept {
    Utilization u;
    u.su = padded_macs ? static_cast<double>(useful_macs) / static_cast<double>(padded_macs) : 0.0;
    u.tu = total_cycles ? static_cast<double>(ideal_cycles) / static_cast<double>(total_cycles) : 0.0;
    u.ou = u.su * u.tu;
    return u;
}

Utilization metrics(const SimReport& r) noexcept {
    return utilization(r.useful_macs, r.padded_macs, r.ideal_cycles, r.total_cycles);
}

namespace {

constexpr std::uint32_t kWriterId = 0;
constexpr std::uint32_t kReaderA = 1;
constexpr std::uint32_t kReaderB = 2;

std::uint32_t make_tag(std::uint32_t streamer, std::uint32_t port) noexcept { return streamer << 16 | port; }

class Engine {
public:
    Engine(const ValidatedConfig& cfg, std::span<const JobInput> jobs, const MechanismFlags& flags,
           const SimOptions& opts)
        : cfg_(cfg),
          jobs_(jobs),
          flags_(flags),
          opts_(opts),
          depth_(flags.effective_depth(cfg)),
          on_demand_(!flags.prefetch_buffering),
          spm_(cfg, opts.porting),
          shape_(CoreShape::from(cfg)),
          a_vals_(std::size_t{cfg.mu()} * cfg.ku()),
          b_vals_(std::size_t{cfg.ku()} * cfg.nu()) {
        if (depth_ == 0) throw ZeroParamError("buffer depth must be >= 1");
        plans_.reserve(jobs.size());
        programs_.reserve(jobs.size());
        report_.jobs.resize(jobs.size());
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            const GemmJob& job = jobs[i].job;
            const Layout requested = flags.strided_layout ? job.layout : Layout::contiguous;
            plans_.push_back(plan_layout(cfg, job.dims, requested, job.order));
            if (!fits_spm(cfg, plans_.back()))
                throw CapacityError("job " + std::to_string(i) + " (" + std::to_string(job.dims.m) + "x" +
                                    std::to_string(job.dims.k) + "x" + std::to_string(job.dims.n) + ") needs " +
                                    std::to_string(plans_.back().footprint_bytes) + " B of SPM, capacity is " +
                                    std::to_string(cfg.capacity_bytes()) + " B; tile it first");
            programs_.push_back(build_csr_program(cfg, plans_.back().program, opts.extra_csr_writes));
            if (opts.functional) {
                const auto& in = jobs[i];
                if (in.a.rows() != job.dims.m || in.a.cols() != job.dims.k || in.b.rows() != job.dims.k ||
                    in.b.cols() != job.dims.n)
                    throw ShapeMismatchError("job " + std::to_string(i) + " operands do not match its dimensions");
            }

            JobRecord& rec = report_.jobs[i];
            rec.job = job;
            rec.layout = plans_.back().layout;
            rec.csr_writes = static_cast<std::uint32_t>(programs_.back().size());
            const LoopNest nest = LoopNest::for_job(cfg, job.dims, job.order);
            rec.ideal_cycles = nest.compute_steps();
            rec.useful_macs = job.dims.macs();
            rec.padded_macs = rec.ideal_cycles * cfg.mu() * cfg.ku() * cfg.nu();
        }
    }

    SimReport run() {
        const std::size_t n = jobs_.size();
        std::uint64_t cycle = 0;
        std::uint64_t last_progress = 0;
        while (completed_ < n) {
            progress_ = false;
            activate(cycle);
            if (flags_.cpl && !running_ && !csr_.start_pending() && csr_.shadow_valid()) {
                csr_.commit_shadow();
                progress_ = true;
            }
            host_step();

            const bool was_running = running_;
            std::uint8_t actions = action::none;
            CoreStall stall = CoreStall::none;
            if (running_) step_accelerator(cycle, actions, stall);

            JobRecord& rec = report_.jobs[completed_ - (job_finished_ ? 1 : 0)];
            if (!was_running)
                ++rec.cycles.config;
            else if (actions & action::compute)
                ++rec.cycles.compute;
            else if (stall == CoreStall::finished)
                ++rec.cycles.drain;
            else if (stall == CoreStall::output)
                ++rec.cycles.output_stall;
            else
                ++rec.cycles.input_stall;
            if (job_finished_) {
                rec.end_cycle = cycle;
                if (completed_ < n) report_.jobs[completed_].window_begin = cycle + 1;
                job_finished_ = false;
            }

            if (progress_) last_progress = cycle;
            if (cycle - last_progress > opts_.watchdog_cycles)
                throw SimulationError("no progress for " + std::to_string(opts_.watchdog_cycles) + " cycles at cycle " +
                                      std::to_string(cycle) + " (job " + std::to_string(completed_) + ")");
            ++cycle;
        }
        finish(cycle);
        return std::move(report_);
    }

private:
    void activate(std::uint64_t cycle) {
        if (running_ || !csr_.take_start()) return;
        const std::size_t idx = started_++;
        const OperandPlan& plan = plans_[idx];
        const StreamProgram program = decode_csr_registers(cfg_, csr_.active());
        if (!(program == plan.program))
            throw SimulationError("job " + std::to_string(idx) + ": CSR contents do not decode to its stream program");
        const StreamSet streams = describe_streams(cfg_, program);

        a_.emplace(streams.a, depth_, spm_, 0, on_demand_, opts_.functional);
        b_.emplace(streams.b, depth_, spm_, streams.a.ports(), on_demand_, opts_.functional);
        writer_.emplace(streams.c, depth_, spm_, opts_.functional);
        if (opts_.functional) load_operands(cfg_, plan, jobs_[idx].a, jobs_[idx].b, spm_.bytes());
        core_ = CoreState::start(LoopNest::for_job(cfg_, plan.dims, program.order));
        report_.jobs[idx].start_cycle = cycle;
        running_ = true;
        progress_ = true;
    }

    void host_step() {
        if (host_job_ >= programs_.size()) return;
        if (host_pos_ == 0) {
            if (!running_ && !csr_.start_pending() && !csr_.shadow_valid())
                host_target_ = CsrTarget::active;
            else if (flags_.cpl && !csr_.shadow_valid())
                host_target_ = CsrTarget::shadow;
            else
                return;  // waits for the accelerator or for the pending commit
        }
        const CsrWrite& w = programs_[host_job_].writes[host_pos_];
        csr_.apply_write(host_target_, w.addr, w.value);
        progress_ = true;
        if (++host_pos_ == programs_[host_job_].size()) {
            ++host_job_;
            host_pos_ = 0;
        }
    }

    void step_accelerator(std::uint64_t cycle, std::uint8_t& actions, CoreStall& stall) {
        const std::size_t idx = started_ - 1;
        JobRecord& rec = report_.jobs[idx];
        StreamEvents ev_w, ev_a, ev_b;

        requests_.clear();
        writer_->issue(cycle, requests_, ev_w);
        const std::size_t n_writes = requests_.size();
        a_->issue(requests_, ev_a);
        for (std::size_t i = n_writes; i < requests_.size(); ++i) requests_[i].tag = make_tag(kReaderA, requests_[i].tag);
        const std::size_t n_a = requests_.size();
        b_->issue(requests_, ev_b);
        for (std::size_t i = n_a; i < requests_.size(); ++i) requests_[i].tag = make_tag(kReaderB, requests_[i].tag);

        if (!requests_.empty()) {
            spm_.arbitrate(requests_, arb_);
            rec.conflicts += arb_.stalled.size();
            for (std::uint32_t i : arb_.granted) {
                const MemRequest& r = requests_[i];
                const std::uint32_t port = r.tag & 0xffff;
                switch (r.tag >> 16) {
                    case kWriterId:
                        if (opts_.functional) spm_.stage_write(r.addr, writer_->word_for(port));
                        writer_->on_grant(port);
                        break;
                    case kReaderA: a_->on_grant(port, spm_.read_word(r.addr)); break;
                    default: b_->on_grant(port, spm_.read_word(r.addr)); break;
                }
            }
            if (!arb_.granted.empty()) progress_ = true;
            spm_.commit_writes();
        }
        a_->end_cycle(cycle, ev_a);
        b_->end_cycle(cycle, ev_b);

        const ControllerStep step = controller_next(core_.ctl, a_->fifo().head_ready(cycle), b_->fifo().head_ready(cycle),
                                                    writer_->buffers().can_fill());
        core_.ctl = step.next;
        actions = step.actions;
        stall = step.stall;
        if (actions & action::compute) {
            if (opts_.functional) {
                decode_tile(a_->fifo().head(), cfg_.mu(), cfg_.ku(), cfg_.a_row_words(), cfg_.word_bytes(),
                            cfg_.raw().pa_bits, a_vals_);
                decode_tile(b_->fifo().head(), cfg_.ku(), cfg_.nu(), cfg_.b_row_words(), cfg_.word_bytes(),
                            cfg_.raw().pb_bits, b_vals_);
                tile_step(shape_, core_.acc, a_vals_, b_vals_);
            }
            a_->fifo().pop();
            b_->fifo().pop();
            progress_ = true;
        }
        if (actions & action::emit_c_tile) {
            auto slot = writer_->buffers().fill(cycle);
            if (opts_.functional)
                encode_tile(core_.acc, cfg_.mu(), cfg_.nu(), cfg_.c_row_words(), cfg_.word_bytes(), cfg_.raw().pc_bits,
                            slot);
            if (opts_.record_emits) rec.emits.push_back(core_.ctl.computed);
        }
        if (actions & action::reset_acc) std::fill(core_.acc.begin(), core_.acc.end(), 0);
        if ((actions & action::request_inputs) && on_demand_) {
            a_->add_credit();
            b_->add_credit();
        }
        writer_->end_cycle(ev_w);

        if (core_.ctl.phase == CorePhase::draining && writer_->idle()) {
            for (const auto* s : {&*a_, &*b_})
                report_.max_stall_retries = std::max(report_.max_stall_retries, s->max_retries());
            if (opts_.functional) rec.result = read_result(cfg_, plans_[idx], spm_.bytes());
            running_ = false;
            job_finished_ = true;
            ++completed_;
        }
    }

    void finish(std::uint64_t cycles) {
        SimReport& r = report_;
        r.total_cycles = cycles;
        for (const auto& j : r.jobs) {
            r.cycles += j.cycles;
            r.conflict_count += j.conflicts;
            r.ideal_cycles += j.ideal_cycles;
            r.useful_macs += j.useful_macs;
            r.padded_macs += j.padded_macs;
        }
        if (r.cycles.total() != r.total_cycles) throw SimulationError("cycle accounting does not close");
        r.ops_executed = 2 * r.useful_macs;
        const Utilization u = metrics(r);
        r.su = u.su;
        r.tu = u.tu;
        r.ou = u.ou;
        const double freq_ghz = cfg_.raw().freq_mhz / 1000.0;
        if (r.cycles.compute)
            r.ops_per_compute_cycle = static_cast<double>(r.ops_executed) / static_cast<double>(r.cycles.compute);
        r.steady_state_gops = r.ops_per_compute_cycle * freq_ghz;
        if (r.total_cycles)
            r.achieved_gops = static_cast<double>(r.ops_executed) / static_cast<double>(r.total_cycles) * freq_ghz;
    }

    const ValidatedConfig& cfg_;
    std::span<const JobInput> jobs_;
    MechanismFlags flags_;
    SimOptions opts_;
    std::uint32_t depth_;
    bool on_demand_;

    Spm spm_;
    CsrFile csr_;
    std::vector<OperandPlan> plans_;
    std::vector<CsrProgram> programs_;
    SimReport report_;

    std::size_t host_job_ = 0;
    std::size_t host_pos_ = 0;
    CsrTarget host_target_ = CsrTarget::active;

    bool running_ = false;
    bool job_finished_ = false;
    bool progress_ = false;
    std::size_t started_ = 0;
    std::size_t completed_ = 0;
    std::optional<InputStreamer> a_;
    std::optional<InputStreamer> b_;
    std::optional<OutputWriter> writer_;
    CoreShape shape_;
    CoreState core_;
    std::vector<std::int32_t> a_vals_;
    std::vector<std::int32_t> b_vals_;
    std::vector<MemRequest> requests_;
    Arbitration arb_;
};

}  // namespace

SimReport simulate(const ValidatedConfig& cfg, std::span<const JobInput> jobs, const MechanismFlags& flags,
                   const SimOptions& options) {
    if (jobs.empty()) return {};
    return Engine(cfg, jobs, flags, options).run();
}

SimReport simulate_timing(const ValidatedConfig& cfg, std::span<const GemmJob> jobs, const MechanismFlags& flags,
                          SimOptions options) {
    options.functional = false;
    std::vector<JobInput> inputs;
    inputs.reserve(jobs.size());
    for (const auto& j : jobs) inputs.push_back({j, {}, {}});
    return simulate(cfg, inputs, flags, options);
}

}  // namespace gemmsim
