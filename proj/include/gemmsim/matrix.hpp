#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gemmsim {

/// Dense row-major integer matrix.
template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<const T> data() const noexcept { return data_; }
    std::span<T> data() noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using OperandMatrix = Matrix<std::int32_t>;
using ResultMatrix = Matrix<std::int64_t>;

/// Sign-extends the low `bits` bits of v (two's-complement wraparound).
constexpr std::int64_t wrap_to_bits(std::int64_t v, unsigned bits) noexcept {
    if (bits >= 64) return v;
    const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
    const std::uint64_t sign = std::uint64_t{1} << (bits - 1);
    const std::uint64_t u = static_cast<std::uint64_t>(v) & mask;
    return static_cast<std::int64_t>((u ^ sign) - sign);
}

constexpr bool fits_signed(std::int64_t v, unsigned bits) noexcept { return wrap_to_bits(v, bits) == v; }

// Bit-packed little-endian element access inside a byte buffer.
void pack_element(std::span<std::uint8_t> bytes, std::size_t bit_offset, unsigned width, std::int64_t value) noexcept;
std::int64_t unpack_element(std::span<const std::uint8_t> bytes, std::size_t bit_offset, unsigned width) noexcept;

}  // namespace gemmsim
