#pragma once

#include <gemmsim/job.hpp>
#include <gemmsim/matrix.hpp>
#include <gemmsim/platform_config.hpp>
#include <gemmsim/sim_engine.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace gemmsim {

struct ConvLayerSpec {
    std::uint32_t ox = 1;
    std::uint32_t oy = 1;
    std::uint32_t fx = 1;
    std::uint32_t fy = 1;
    std::uint32_t c = 1;
    std::uint32_t kout = 1;
};

/// M = Ox*Oy, K = Fx*Fy*C, N = Kout.
GemmDims im2col_dims(const ConvLayerSpec& layer);

/// n jobs with M, K, N drawn i.i.d. from {8, 16, ..., 256}.
///
/// Generator: std::mt19937_64 seeded with `seed`; each dimension is
/// 8 * (1 + x % 32) for the next 64-bit output x, drawn in the order M, K, N.
std::vector<GemmJob> random_suite(std::uint64_t seed, std::size_t n, Layout layout = Layout::interleaved);

/// Uniform two's-complement values of `bits` bits from the generator.
OperandMatrix random_operand(std::mt19937_64& rng, std::size_t rows, std::size_t cols, unsigned bits);

/// Splits a job along M and N (never K) into sub-jobs that fit the SPM under
/// both layouts and whose loop bounds fit the CSR fields. Sub-jobs carry
/// their offset inside the parent result and are numbered by `part`.
/// Throws CapacityError when even a single output tile does not fit.
std::vector<GemmJob> auto_tile(const ValidatedConfig& cfg, const GemmJob& job);

/// Slices the parent operands for each sub-job produced by auto_tile().
std::vector<JobInput> slice_operands(const std::vector<GemmJob>& parts, const OperandMatrix& a, const OperandMatrix& b);

/// Writes a sub-job result into the parent result at its offsets.
void place_result(ResultMatrix& parent, const GemmJob& part, const ResultMatrix& result);

std::uint64_t total_macs(const std::vector<GemmJob>& jobs) noexcept;

// ---------------------------------------------------------------------------
// Model layer files
//
// One record per line, '#' starts a comment:
//
//   conv    ox=<n> oy=<n> fx=<n> fy=<n> c=<n> kout=<n> [repeat=<n>] [name=<id>]
//   dwconv  ox=<n> oy=<n> fx=<n> fy=<n> c=<n>          [repeat=<n>] [name=<id>]
//   linear  m=<n> k=<n> n=<n>                          [repeat=<n>] [name=<id>]
//   matmul  m=<n> k=<n> n=<n>                          [repeat=<n>] [name=<id>]
//
// A depthwise layer becomes c independent (ox*oy, fx*fy, 1) GeMMs.
// ---------------------------------------------------------------------------

enum class LayerKind : std::uint8_t { conv, dwconv, linear, matmul };

struct ModelLayer {
    LayerKind kind = LayerKind::linear;
    std::string name;
    GemmDims dims;                 // per GeMM
    std::uint32_t gemms = 1;       // GeMMs per repetition (c for dwconv)
    std::uint32_t repeat = 1;
    std::size_t line = 0;

    std::uint64_t macs() const noexcept { return dims.macs() * gemms * repeat; }
};

std::vector<ModelLayer> parse_model_spec(std::string_view text, const std::string& source = "<model>");
std::vector<ModelLayer> read_model_spec(const std::string& path);

/// Expands layers into accelerator jobs in file order, auto-tiled.
std::vector<GemmJob> expand_layers(const ValidatedConfig& cfg, const std::vector<ModelLayer>& layers,
                                   Layout layout = Layout::interleaved);

std::vector<GemmJob> load_model_spec(const std::string& path, const ValidatedConfig& cfg,
                                     Layout layout = Layout::interleaved);

}  // namespace gemmsim
