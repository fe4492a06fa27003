#pragma once

// Data-parallel inner loops of the Monte Carlo engine. Each kernel has a
// scalar reference implementation and, on x86-64, an AVX2 variant chosen at
// runtime. Variants are bit-identical: reductions follow one canonical
// order (four interleaved partial sums, combined as (p0 + p2) + (p1 + p3),
// then the remainder in sequence) and nothing is fused into an FMA.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace offlab::kernels {

struct PhiloxKey {
  std::uint32_t k0 = 0;
  std::uint32_t k1 = 0;
};

/// Counter blocks {first_block + i, stream, path_lo, path_hi} for
/// i in [0, out.size() / 4), each encrypted with Philox4x32-10 and written as
/// four consecutive words. out.size() must be a multiple of 4.
using PhiloxBlocksFn = void (*)(PhiloxKey key, std::uint32_t stream, std::uint64_t path,
                                std::uint32_t first_block, std::span<std::uint32_t> out);

/// out[i] = shift + scale * in[i].
using AffineFn = void (*)(std::span<const double> in, double shift, double scale,
                          std::span<double> out);

/// Sum and sum of squares of each of sums.size() contiguous blocks of
/// block_len values.
using BlockMomentsFn = void (*)(std::span<const double> x, std::size_t block_len,
                                std::span<double> sums, std::span<double> sumsq);

/// Column sums and sums of squares of a row-major matrix with sums.size()
/// columns: element i goes to column i % width.
using StridedMomentsFn = void (*)(std::span<const double> x, std::span<double> sums,
                                  std::span<double> sumsq);

struct KernelTable {
  std::string_view name;
  PhiloxBlocksFn philox_blocks;
  AffineFn affine;
  BlockMomentsFn block_moments;
  StridedMomentsFn strided_moments;
};

const KernelTable& scalar_table() noexcept;

/// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_table() noexcept;

bool cpu_has_avx2() noexcept;

/// Table used by the engine: AVX2 when compiled and supported by the CPU,
/// unless OFFLAB_SIMD=scalar is set in the environment.
const KernelTable& active() noexcept;

}  // namespace offlab::kernels
