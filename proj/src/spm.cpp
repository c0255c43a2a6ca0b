#include <gemmsim/spm.hpp>

#include <gemmsim/errors.hpp>

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>

namespace gemmsim {

namespace {

constexpr std::array<char, 4> kImageMagic = {'G', 'S', 'P', 'M'};
constexpr std::uint32_t kImageVersion = 1;
constexpr std::uint32_t kNoShift = 64;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
    return v;
}

}  // namespace

BankAddress map_address(const ValidatedConfig& cfg, std::uint64_t addr) {
    const std::uint64_t wb = cfg.word_bytes();
    if (addr % wb != 0) throw MisalignedError("address " + std::to_string(addr) + " is not word aligned");
    if (addr >= cfg.capacity_bytes())
        throw OutOfRangeError("address " + std::to_string(addr) + " beyond SPM capacity " +
                              std::to_string(cfg.capacity_bytes()));
    const std::uint64_t word = addr / wb;
    return {static_cast<std::uint32_t>(word % cfg.raw().n_bank), static_cast<std::uint32_t>(word / cfg.raw().n_bank)};
}

Spm::Spm(const ValidatedConfig& cfg, BankPorting porting)
    : cfg_(cfg),
      porting_(porting),
      word_bytes_(cfg.word_bytes()),
      memory_(cfg.capacity_bytes(), 0),
      read_stamp_(cfg.raw().n_bank, 0),
      write_stamp_(cfg.raw().n_bank, 0),
      n_bank_(cfg.raw().n_bank) {
    if ((word_bytes_ & (word_bytes_ - 1)) == 0)
        while ((1u << word_shift_) < word_bytes_) ++word_shift_;
    else
        word_shift_ = kNoShift;
    if ((n_bank_ & (n_bank_ - 1)) == 0) bank_mask_ = n_bank_ - 1;
}

void Spm::arbitrate(std::span<const MemRequest> requests, Arbitration& out) {
    out.clear();
    ++epoch_;

    // Priority key: writes before reads, then requester id. Requests usually
    // arrive already ordered, so insertion sort is linear in practice.
    auto key = [&](std::uint32_t i) {
        return (std::uint64_t{requests[i].kind == AccessKind::read} << 32) | requests[i].requester;
    };
    const auto n = static_cast<std::uint32_t>(requests.size());
    order_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::uint32_t j = i;
        const auto ki = key(i);
        while (j > 0 && key(order_[j - 1]) > ki) {
            order_[j] = order_[j - 1];
            --j;
        }
        order_[j] = i;
    }

    const std::uint64_t capacity = memory_.size();
    const bool shared = porting_ == BankPorting::single;
    for (std::uint32_t idx : order_) {
        const MemRequest& r = requests[idx];
        if (r.addr % word_bytes_ != 0 || r.addr >= capacity) (void)map_address(r.addr);  // throws
        const std::uint64_t word = word_shift_ != kNoShift ? r.addr >> word_shift_ : r.addr / word_bytes_;
        const auto bank = static_cast<std::uint32_t>(bank_mask_ ? (word & bank_mask_) : (word % n_bank_));
        auto& stamp = (shared || r.kind == AccessKind::read) ? read_stamp_[bank] : write_stamp_[bank];
        if (stamp == epoch_) {
            out.stalled.push_back(idx);
        } else {
            stamp = epoch_;
            out.granted.push_back(idx);
        }
    }
    total_granted_ += out.granted.size();
    total_stalled_ += out.stalled.size();
}

void Spm::stage_write(std::uint64_t addr, std::span<const std::uint8_t> word) {
    const auto offset = static_cast<std::uint32_t>(staged_data_.size());
    staged_data_.insert(staged_data_.end(), word.begin(), word.begin() + word_bytes_);
    staged_.push_back({addr, offset});
}

void Spm::commit_writes() {
    for (const auto& w : staged_) std::memcpy(memory_.data() + w.addr, staged_data_.data() + w.offset, word_bytes_);
    staged_.clear();
    staged_data_.clear();
}

void Spm::clear() noexcept {
    std::fill(memory_.begin(), memory_.end(), 0);
    staged_.clear();
    staged_data_.clear();
}

void Spm::save_image(const std::string& path) const {
    std::vector<std::uint8_t> header;
    header.insert(header.end(), kImageMagic.begin(), kImageMagic.end());
    put_le<std::uint32_t>(header, kImageVersion);
    put_le<std::uint64_t>(header, memory_.size());
    put_le<std::uint32_t>(header, word_bytes_);
    put_le<std::uint32_t>(header, cfg_.raw().n_bank);
    put_le<std::uint32_t>(header, cfg_.raw().bank_depth);
    put_le<std::uint32_t>(header, 0);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write SPM image '" + path + "'");
    out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(memory_.data()), static_cast<std::streamsize>(memory_.size()));
}

void Spm::load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open SPM image '" + path + "'");
    std::array<std::uint8_t, 32> header{};
    in.read(reinterpret_cast<char*>(header.data()), header.size());
    if (in.gcount() != static_cast<std::streamsize>(header.size()) ||
        !std::equal(kImageMagic.begin(), kImageMagic.end(), header.begin()))
        throw Error("'" + path + "' is not an SPM image");
    if (get_le<std::uint32_t>(header.data() + 4) != kImageVersion)
        throw Error("unsupported SPM image version in '" + path + "'");
    const auto capacity = get_le<std::uint64_t>(header.data() + 8);
    const auto word_bytes = get_le<std::uint32_t>(header.data() + 16);
    if (capacity != memory_.size() || word_bytes != word_bytes_)
        throw Error("SPM image '" + path + "' has capacity " + std::to_string(capacity) + " / word " +
                    std::to_string(word_bytes) + " B, expected " + std::to_string(memory_.size()) + " / " +
                    std::to_string(word_bytes_) + " B");
    in.read(reinterpret_cast<char*>(memory_.data()), static_cast<std::streamsize>(memory_.size()));
    if (in.gcount() != static_cast<std::streamsize>(memory_.size())) throw Error("truncated SPM image '" + path + "'");
}

}  // namespace gemmsim
