#include <gemmsim/platform_config.hpp>

#include <gemmsim/errors.hpp>

#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace gemmsim {

namespace {

std::uint32_t ceil_div(std::uint64_t a, std::uint64_t b) { return static_cast<std::uint32_t>((a + b - 1) / b); }

std::uint32_t ceil_log2(std::uint32_t v) {
    return v <= 1 ? 0u : static_cast<std::uint32_t>(std::bit_width(v - 1));
}

bool is_supported_operand_width(std::uint32_t bits) { return bits == 2 || bits == 4 || bits == 8; }

struct Field {
    const char* name;
    std::function<std::string(const PlatformConfig&)> get;
    std::function<bool(PlatformConfig&, std::string_view)> set;
};

bool parse_u32(std::string_view s, std::uint32_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
    // from_chars for double is not available on every libstdc++ we target.
    std::string tmp(s);
    char* end = nullptr;
    out = std::strtod(tmp.c_str(), &end);
    return !tmp.empty() && end == tmp.c_str() + tmp.size();
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

#define GEMMSIM_U32_FIELD(name)                                                    \
    Field {                                                                        \
        #name, [](const PlatformConfig& c) { return std::to_string(c.name); },     \
            [](PlatformConfig& c, std::string_view v) { return parse_u32(v, c.name); } \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        GEMMSIM_U32_FIELD(mu),
        GEMMSIM_U32_FIELD(nu),
        GEMMSIM_U32_FIELD(ku),
        GEMMSIM_U32_FIELD(pa_bits),
        GEMMSIM_U32_FIELD(pb_bits),
        GEMMSIM_U32_FIELD(pc_bits),
        GEMMSIM_U32_FIELD(stream_depth),
        GEMMSIM_U32_FIELD(r_mem),
        GEMMSIM_U32_FIELD(w_mem),
        GEMMSIM_U32_FIELD(word_bits),
        GEMMSIM_U32_FIELD(n_bank),
        GEMMSIM_U32_FIELD(bank_depth),
        Field{"freq_mhz", [](const PlatformConfig& c) { return format_double(c.freq_mhz); },
              [](PlatformConfig& c, std::string_view v) { return parse_double(v, c.freq_mhz); }},
    };
    return table;
}

#undef GEMMSIM_U32_FIELD

const Field* find_field(std::string_view name) {
    for (const auto& f : fields()) {
        if (name == f.name) return &f;
    }
    return nullptr;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

ValidatedConfig::ValidatedConfig(const PlatformConfig& raw) : raw_(raw) {
    capacity_bytes_ = static_cast<std::uint64_t>(raw.n_bank) * raw.bank_depth * (raw.word_bits / 8);
    peak_ops_ = 2ull * raw.mu * raw.ku * raw.nu;
    a_row_words_ = ceil_div(static_cast<std::uint64_t>(raw.ku) * raw.pa_bits, raw.word_bits);
    b_row_words_ = ceil_div(static_cast<std::uint64_t>(raw.nu) * raw.pb_bits, raw.word_bits);
    c_row_words_ = ceil_div(static_cast<std::uint64_t>(raw.nu) * raw.pc_bits, raw.word_bits);
}

std::uint64_t ValidatedConfig::read_bits_needed() const noexcept {
    return static_cast<std::uint64_t>(raw_.mu) * raw_.ku * raw_.pa_bits +
           static_cast<std::uint64_t>(raw_.ku) * raw_.nu * raw_.pb_bits;
}

std::uint64_t ValidatedConfig::write_bits_needed() const noexcept {
    return static_cast<std::uint64_t>(raw_.mu) * raw_.nu * raw_.pc_bits;
}

ValidatedConfig ValidatedConfig::with_stream_depth(std::uint32_t depth) const {
    PlatformConfig c = raw_;
    c.stream_depth = depth;
    return validate(c);
}

ValidatedConfig validate(const PlatformConfig& raw) {
    const std::pair<const char*, std::uint32_t> counts[] = {
        {"mu", raw.mu},         {"nu", raw.nu},           {"ku", raw.ku},
        {"stream_depth", raw.stream_depth}, {"r_mem", raw.r_mem}, {"w_mem", raw.w_mem},
        {"word_bits", raw.word_bits},       {"n_bank", raw.n_bank}, {"bank_depth", raw.bank_depth},
        {"pa_bits", raw.pa_bits}, {"pb_bits", raw.pb_bits}, {"pc_bits", raw.pc_bits},
    };
    for (const auto& [name, value] : counts) {
        if (value == 0) throw ZeroParamError(std::string(name) + " must be >= 1");
    }
    if (!(raw.freq_mhz > 0.0)) throw ZeroParamError("freq_mhz must be > 0");

    if (!is_supported_operand_width(raw.pa_bits))
        throw PrecisionError("pa_bits must be one of {2, 4, 8}, got " + std::to_string(raw.pa_bits));
    if (!is_supported_operand_width(raw.pb_bits))
        throw PrecisionError("pb_bits must be one of {2, 4, 8}, got " + std::to_string(raw.pb_bits));
    const std::uint32_t acc_floor = raw.pa_bits + raw.pb_bits + ceil_log2(raw.ku);
    if (raw.pc_bits < acc_floor)
        throw PrecisionError("pc_bits >= pa_bits + pb_bits + ceil(log2(ku)) violated: " +
                             std::to_string(raw.pc_bits) + " < " + std::to_string(acc_floor));
    if (raw.pc_bits > 64) throw PrecisionError("pc_bits must be <= 64");
    if (raw.word_bits % 8 != 0) throw PrecisionError("word_bits must be a multiple of 8");

    ValidatedConfig cfg(raw);

    const std::uint64_t read_have = static_cast<std::uint64_t>(raw.r_mem) * raw.word_bits;
    if (read_have < cfg.read_bits_needed())
        throw BandwidthError("read bandwidth r_mem*word_bits >= mu*ku*pa_bits + ku*nu*pb_bits violated: needs " +
                             std::to_string(cfg.read_bits_needed()) + " bits/cycle, has " +
                             std::to_string(read_have));
    const std::uint64_t write_have = static_cast<std::uint64_t>(raw.w_mem) * raw.word_bits;
    if (write_have < cfg.write_bits_needed())
        throw BandwidthError("write bandwidth w_mem*word_bits >= mu*nu*pc_bits violated: needs " +
                             std::to_string(cfg.write_bits_needed()) + " bits/cycle, has " +
                             std::to_string(write_have));
    // Rows are word-padded, so the bit inequalities alone do not guarantee a
    // whole tile per cycle when rows straddle words.
    if (cfg.a_tile_words() + cfg.b_tile_words() > raw.r_mem)
        throw BandwidthError("read ports: A' and B' tiles need " +
                             std::to_string(cfg.a_tile_words() + cfg.b_tile_words()) +
                             " word-padded ports, r_mem is " + std::to_string(raw.r_mem));
    if (cfg.c_tile_words() > raw.w_mem)
        throw BandwidthError("write ports: C' tile needs " + std::to_string(cfg.c_tile_words()) +
                             " word-padded ports, w_mem is " + std::to_string(raw.w_mem));
    return cfg;
}

std::uint64_t peak_ops_per_cycle(const ValidatedConfig& cfg) noexcept { return cfg.peak_ops_per_cycle(); }

double peak_gops(const ValidatedConfig& cfg) noexcept {
    return static_cast<double>(cfg.peak_ops_per_cycle()) * cfg.raw().freq_mhz / 1000.0;
}

PlatformConfig case_study_config() { return PlatformConfig{}; }

PlatformConfig parse_config_text(std::string_view text, const std::string& source, PlatformConfig base) {
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> seen;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(source, line_no, "", "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        const Field* f = find_field(key);
        if (f == nullptr) throw ParseError(source, line_no, key, "unknown config field");
        if (auto it = seen.find(key); it != seen.end())
            throw ParseError(source, line_no, key, "duplicate field (first set on line " +
                                                       std::to_string(it->second) + ")");
        seen.emplace(key, line_no);
        if (!f->set(base, value))
            throw ParseError(source, line_no, key, "invalid value '" + std::string(value) + "'");
    }
    return base;
}

PlatformConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

void apply_overrides(PlatformConfig& cfg, const std::map<std::string, std::string>& overrides) {
    for (const auto& [key, value] : overrides) {
        const Field* f = find_field(key);
        if (f == nullptr) throw ParseError("<override>", 0, key, "unknown config field");
        if (!f->set(cfg, value)) throw ParseError("<override>", 0, key, "invalid value '" + value + "'");
    }
}

std::string to_config_text(const PlatformConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) {
        out += f.name;
        out += " = ";
        out += f.get(cfg);
        out += '\n';
    }
    return out;
}

std::string config_hash(const PlatformConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : to_config_text(cfg)) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_capacity(std::uint64_t bytes) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%llu B (%.2f KiB, %.2f kB)", static_cast<unsigned long long>(bytes),
                  static_cast<double>(bytes) / 1024.0, static_cast<double>(bytes) / 1000.0);
    return buf;
}

}  // namespace gemmsim
