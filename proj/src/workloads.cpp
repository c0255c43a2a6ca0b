#include <gemmsim/workloads.hpp>

#include <gemmsim/errors.hpp>
#include <gemmsim/streamer.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace gemmsim {

namespace {

constexpr std::uint32_t kMaxBound = 1023;  // 10-bit CSR bound fields

std::uint32_t ceil_div(std::uint32_t a, std::uint32_t b) { return (a + b - 1) / b; }

bool chunk_fits(const ValidatedConfig& cfg, std::uint32_t k, std::uint32_t m_tiles, std::uint32_t n_tiles) {
    const GemmDims d{m_tiles * cfg.mu(), k, n_tiles * cfg.nu()};
    for (Layout layout : {Layout::contiguous, Layout::interleaved})
        if (!fits_spm(cfg, plan_layout(cfg, d, layout))) return false;
    return true;
}

}  // namespace

GemmDims im2col_dims(const ConvLayerSpec& l) {
    if (!l.ox || !l.oy || !l.fx || !l.fy || !l.c || !l.kout) throw ShapeMismatchError("conv layer fields must be >= 1");
    return {l.ox * l.oy, l.fx * l.fy * l.c, l.kout};
}

std::vector<GemmJob> random_suite(std::uint64_t seed, std::size_t n, Layout layout) {
    std::mt19937_64 rng(seed);
    auto dim = [&] { return static_cast<std::uint32_t>(8 * (1 + rng() % 32)); };
    std::vector<GemmJob> jobs;
    jobs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        GemmJob job;
        job.dims.m = dim();
        job.dims.k = dim();
        job.dims.n = dim();
        job.layout = layout;
        job.workload = static_cast<std::uint32_t>(i);
        jobs.push_back(job);
    }
    return jobs;
}

OperandMatrix random_operand(std::mt19937_64& rng, std::size_t rows, std::size_t cols, unsigned bits) {
    OperandMatrix m(rows, cols);
    for (auto& v : m.data()) v = static_cast<std::int32_t>(wrap_to_bits(static_cast<std::int64_t>(rng() >> 32), bits));
    return m;
}

std::vector<GemmJob> auto_tile(const ValidatedConfig& cfg, const GemmJob& job) {
    const LoopNest nest = LoopNest::for_job(cfg, job.dims, job.order);
    if (nest.k1 > kMaxBound)
        throw CapacityError("K = " + std::to_string(job.dims.k) + " needs " + std::to_string(nest.k1) +
                            " k-steps, more than the bound field allows");
    if (!chunk_fits(cfg, job.dims.k, 1, 1))
        throw CapacityError("K = " + std::to_string(job.dims.k) + " does not fit the SPM even for a single output tile");

    // Largest output block (in tiles) that fits; ties go to the taller block.
    std::uint32_t best_m = 1, best_n = 1;
    const std::uint32_t m_cap = std::min(nest.m2, kMaxBound);
    const std::uint32_t n_cap = std::min(nest.n2, kMaxBound);
    for (std::uint32_t mt = m_cap; mt > 0; --mt) {
        if (std::uint64_t{mt} * n_cap < std::uint64_t{best_m} * best_n) break;
        if (!chunk_fits(cfg, job.dims.k, mt, 1)) continue;
        std::uint32_t lo = 1, hi = n_cap;
        while (lo < hi) {
            const std::uint32_t mid = lo + (hi - lo + 1) / 2;
            if (chunk_fits(cfg, job.dims.k, mt, mid))
                lo = mid;
            else
                hi = mid - 1;
        }
        if (std::uint64_t{mt} * lo > std::uint64_t{best_m} * best_n) {
            best_m = mt;
            best_n = lo;
        }
    }

    // Spread tiles evenly over the chunks rather than leaving a small tail.
    const std::uint32_t m_chunks = ceil_div(nest.m2, best_m);
    const std::uint32_t n_chunks = ceil_div(nest.n2, best_n);
    const std::uint32_t m_per = ceil_div(nest.m2, m_chunks);
    const std::uint32_t n_per = ceil_div(nest.n2, n_chunks);

    std::vector<GemmJob> parts;
    auto emit = [&](std::uint32_t mi, std::uint32_t ni) {
        GemmJob p = job;
        p.m_offset = job.m_offset + mi * m_per * cfg.mu();
        p.n_offset = job.n_offset + ni * n_per * cfg.nu();
        p.dims.m = std::min(m_per * cfg.mu(), job.dims.m - mi * m_per * cfg.mu());
        p.dims.n = std::min(n_per * cfg.nu(), job.dims.n - ni * n_per * cfg.nu());
        p.part = static_cast<std::uint32_t>(parts.size());
        parts.push_back(p);
    };
    if (job.order == LoopOrder::mnk) {
        for (std::uint32_t mi = 0; mi < m_chunks; ++mi)
            for (std::uint32_t ni = 0; ni < n_chunks; ++ni) emit(mi, ni);
    } else {
        for (std::uint32_t ni = 0; ni < n_chunks; ++ni)
            for (std::uint32_t mi = 0; mi < m_chunks; ++mi) emit(mi, ni);
    }
    return parts;
}

std::vector<JobInput> slice_operands(const std::vector<GemmJob>& parts, const OperandMatrix& a, const OperandMatrix& b) {
    std::vector<JobInput> inputs;
    inputs.reserve(parts.size());
    for (const auto& p : parts) {
        JobInput in{p, OperandMatrix(p.dims.m, p.dims.k), OperandMatrix(p.dims.k, p.dims.n)};
        for (std::uint32_t r = 0; r < p.dims.m; ++r)
            std::copy_n(a.row(p.m_offset + r).begin(), p.dims.k, in.a.row(r).begin());
        for (std::uint32_t r = 0; r < p.dims.k; ++r)
            std::copy_n(b.row(r).begin() + p.n_offset, p.dims.n, in.b.row(r).begin());
        inputs.push_back(std::move(in));
    }
    return inputs;
}

void place_result(ResultMatrix& parent, const GemmJob& part, const ResultMatrix& result) {
    for (std::size_t r = 0; r < result.rows(); ++r)
        std::copy(result.row(r).begin(), result.row(r).end(), parent.row(part.m_offset + r).begin() + part.n_offset);
}

std::uint64_t total_macs(const std::vector<GemmJob>& jobs) noexcept {
    std::uint64_t sum = 0;
    for (const auto& j : jobs) sum += j.dims.macs();
    return sum;
}

// ---------------------------------------------------------------------------

std::vector<ModelLayer> parse_model_spec(std::string_view text, const std::string& source) {
    static const std::map<std::string, std::pair<LayerKind, std::vector<std::string>>> kinds = {
        {"conv", {LayerKind::conv, {"ox", "oy", "fx", "fy", "c", "kout"}}},
        {"dwconv", {LayerKind::dwconv, {"ox", "oy", "fx", "fy", "c"}}},
        {"linear", {LayerKind::linear, {"m", "k", "n"}}},
        {"matmul", {LayerKind::matmul, {"m", "k", "n"}}},
    };

    std::vector<ModelLayer> layers;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream tokens(line);
        std::string kind;
        if (!(tokens >> kind)) continue;

        const auto it = kinds.find(kind);
        if (it == kinds.end()) throw ParseError(source, line_no, kind, "unknown layer kind");
        const auto& [layer_kind, required] = it->second;

        std::map<std::string, std::uint32_t> values;
        ModelLayer layer;
        layer.kind = layer_kind;
        layer.line = line_no;
        std::string tok;
        while (tokens >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos || eq == 0) throw ParseError(source, line_no, tok, "expected key=value");
            const std::string key = tok.substr(0, eq);
            const std::string val = tok.substr(eq + 1);
            if (key == "name") {
                layer.name = val;
                continue;
            }
            if (key != "repeat" && std::find(required.begin(), required.end(), key) == required.end())
                throw ParseError(source, line_no, key, "unknown field for " + kind);
            if (values.count(key)) throw ParseError(source, line_no, key, "duplicate field");
            std::uint32_t v = 0;
            const auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
            if (ec != std::errc{} || ptr != val.data() + val.size() || v == 0)
                throw ParseError(source, line_no, key, "expected a positive integer, got '" + val + "'");
            values[key] = v;
        }
        for (const auto& key : required)
            if (!values.count(key)) throw ParseError(source, line_no, key, "missing field");
        if (values.count("repeat")) layer.repeat = values["repeat"];

        switch (layer_kind) {
            case LayerKind::conv:
                layer.dims = im2col_dims({values["ox"], values["oy"], values["fx"], values["fy"], values["c"], values["kout"]});
                break;
            case LayerKind::dwconv:
                layer.dims = {values["ox"] * values["oy"], values["fx"] * values["fy"], 1};
                layer.gemms = values["c"];
                break;
            default: layer.dims = {values["m"], values["k"], values["n"]}; break;
        }
        if (layer.name.empty()) layer.name = kind + std::to_string(layers.size());
        layers.push_back(std::move(layer));
    }
    return layers;
}

std::vector<ModelLayer> read_model_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model spec '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model_spec(ss.str(), path);
}

std::vector<GemmJob> expand_layers(const ValidatedConfig& cfg, const std::vector<ModelLayer>& layers, Layout layout) {
    std::vector<GemmJob> jobs;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const ModelLayer& layer = layers[li];
        GemmJob parent;
        parent.dims = layer.dims;
        parent.layout = layout;
        parent.workload = static_cast<std::uint32_t>(li);
        // Every repetition has the same shape, so tile once.
        const std::vector<GemmJob> parts = auto_tile(cfg, parent);
        const std::uint64_t count = std::uint64_t{layer.gemms} * layer.repeat;
        for (std::uint64_t r = 0; r < count; ++r) {
            for (GemmJob p : parts) {
                p.rep = static_cast<std::uint32_t>(r);
                jobs.push_back(p);
            }
        }
    }
    return jobs;
}

std::vector<GemmJob> load_model_spec(const std::string& path, const ValidatedConfig& cfg, Layout layout) {
    return expand_layers(cfg, read_model_spec(path), layout);
}

}  // namespace gemmsim
