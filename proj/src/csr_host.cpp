#include <gemmsim/csr_host.hpp>

#include <gemmsim/errors.hpp>

#include <json.hpp>

#include <cstdio>

namespace gemmsim {

namespace {

std::uint32_t pack(std::uint64_t value, std::uint32_t width, const char* field) {
    if (value >> width)
        throw FieldOverflowError(std::string("CSR field ") + field + " = " + std::to_string(value) +
                                 " exceeds " + std::to_string(width) + " bits");
    return static_cast<std::uint32_t>(value);
}

std::uint64_t words(std::uint64_t bytes, std::uint32_t word_bytes, const char* field) {
    if (bytes % word_bytes != 0)
        throw MisalignedError(std::string("CSR field ") + field + " = " + std::to_string(bytes) +
                              " bytes is not a whole number of words");
    return bytes / word_bytes;
}

std::uint32_t field(std::uint32_t reg, std::uint32_t lsb, std::uint32_t width) {
    return (reg >> lsb) & ((width == 32) ? ~0u : ((1u << width) - 1));
}

}  // namespace

const std::vector<CsrField>& csr_map() {
    static const std::vector<CsrField> map = {
        {"m2", csr::bounds, 0, 10, "tiles"},
        {"k1", csr::bounds, 10, 10, "tiles"},
        {"n2", csr::bounds, 20, 10, "tiles"},
        {"a_base", csr::a_base, 0, 24, "bytes"},
        {"b_base", csr::b_base, 0, 24, "bytes"},
        {"c_base", csr::c_base, 0, 24, "bytes"},
        {"a_stride_k", csr::a_strides, 0, 16, "words"},
        {"a_stride_m", csr::a_strides, 16, 16, "words"},
        {"b_stride_k", csr::b_strides, 0, 16, "words"},
        {"b_stride_n", csr::b_strides, 16, 16, "words"},
        {"c_stride_n", csr::c_strides, 0, 16, "words"},
        {"c_stride_m", csr::c_strides, 16, 16, "words"},
        {"a_row_pitch", csr::pitch_ab, 0, 16, "words"},
        {"b_row_pitch", csr::pitch_ab, 16, 16, "words"},
        {"c_row_pitch", csr::ctrl, 0, 16, "words"},
        {"loop_order", csr::ctrl, 16, 1, "flag"},
        {"start", csr::ctrl, 31, 1, "flag"},
    };
    return map;
}

std::string csr_map_json() {
    nlohmann::ordered_json j;
    j["base_address"] = csr::base_address;
    j["register_count"] = csr::register_count;
    j["writes_per_job"] = 9;
    j["scratch_register"] = csr::scratch;
    auto& fields = j["fields"] = nlohmann::ordered_json::array();
    for (const auto& f : csr_map())
        fields.push_back({{"name", f.name}, {"register", f.reg}, {"lsb", f.lsb}, {"width", f.width}, {"unit", f.unit}});
    return j.dump(2) + "\n";
}

CsrProgram build_csr_program(const ValidatedConfig& cfg, const StreamProgram& p, std::uint32_t extra_writes) {
    const std::uint32_t wb = cfg.word_bytes();
    CsrProgram prog;
    auto put = [&](std::uint32_t reg, std::uint32_t value) { prog.writes.push_back({csr::base_address + reg, value}); };

    put(csr::bounds, pack(p.m2, 10, "m2") | pack(p.k1, 10, "k1") << 10 | pack(p.n2, 10, "n2") << 20);
    put(csr::a_base, pack(p.a_base, 24, "a_base"));
    put(csr::b_base, pack(p.b_base, 24, "b_base"));
    put(csr::c_base, pack(p.c_base, 24, "c_base"));
    put(csr::a_strides, pack(words(p.a_stride_k, wb, "a_stride_k"), 16, "a_stride_k") |
                            pack(words(p.a_stride_m, wb, "a_stride_m"), 16, "a_stride_m") << 16);
    put(csr::b_strides, pack(words(p.b_stride_k, wb, "b_stride_k"), 16, "b_stride_k") |
                            pack(words(p.b_stride_n, wb, "b_stride_n"), 16, "b_stride_n") << 16);
    put(csr::c_strides, pack(words(p.c_stride_n, wb, "c_stride_n"), 16, "c_stride_n") |
                            pack(words(p.c_stride_m, wb, "c_stride_m"), 16, "c_stride_m") << 16);
    put(csr::pitch_ab, pack(words(p.a_row_pitch, wb, "a_row_pitch"), 16, "a_row_pitch") |
                           pack(words(p.b_row_pitch, wb, "b_row_pitch"), 16, "b_row_pitch") << 16);
    for (std::uint32_t i = 0; i < extra_writes; ++i) put(csr::scratch, i);
    put(csr::ctrl, pack(words(p.c_row_pitch, wb, "c_row_pitch"), 16, "c_row_pitch") |
                       (p.order == LoopOrder::nmk ? 1u << 16 : 0u) | csr::start_bit);
    return prog;
}

StreamProgram decode_csr_registers(const ValidatedConfig& cfg, const CsrRegisters& r) {
    const std::uint64_t wb = cfg.word_bytes();
    StreamProgram p;
    p.m2 = field(r[csr::bounds], 0, 10);
    p.k1 = field(r[csr::bounds], 10, 10);
    p.n2 = field(r[csr::bounds], 20, 10);
    p.order = field(r[csr::ctrl], 16, 1) ? LoopOrder::nmk : LoopOrder::mnk;
    p.a_base = field(r[csr::a_base], 0, 24);
    p.b_base = field(r[csr::b_base], 0, 24);
    p.c_base = field(r[csr::c_base], 0, 24);
    p.a_stride_k = field(r[csr::a_strides], 0, 16) * wb;
    p.a_stride_m = field(r[csr::a_strides], 16, 16) * wb;
    p.b_stride_k = field(r[csr::b_strides], 0, 16) * wb;
    p.b_stride_n = field(r[csr::b_strides], 16, 16) * wb;
    p.c_stride_n = field(r[csr::c_strides], 0, 16) * wb;
    p.c_stride_m = field(r[csr::c_strides], 16, 16) * wb;
    p.a_row_pitch = field(r[csr::pitch_ab], 0, 16) * wb;
    p.b_row_pitch = field(r[csr::pitch_ab], 16, 16) * wb;
    p.c_row_pitch = field(r[csr::ctrl], 0, 16) * wb;
    return p;
}

void CsrFile::apply_write(CsrTarget target, std::uint32_t addr, std::uint32_t value) {
    if (addr < csr::base_address || addr >= csr::base_address + csr::register_count) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "0x%x", addr);
        throw UnknownCsrError(std::string("no CSR at address ") + buf);
    }
    if (target == CsrTarget::shadow && shadow_valid_)
        throw SimulationError("shadow CSR write while a pre-loaded configuration is pending");
    const std::uint32_t reg = addr - csr::base_address;
    auto& set = target == CsrTarget::active ? active_ : shadow_;
    set[reg] = value;
    if (reg == csr::ctrl && (value & csr::start_bit)) {
        if (target == CsrTarget::active)
            start_pending_ = true;
        else
            shadow_valid_ = true;
    }
}

void CsrFile::commit_shadow() {
    if (!shadow_valid_) throw SimulationError("commit without a valid shadow configuration");
    active_ = shadow_;
    shadow_valid_ = false;
    start_pending_ = true;
}

bool CsrFile::take_start() noexcept {
    const bool s = start_pending_;
    start_pending_ = false;
    return s;
}

}  // namespace gemmsim
