// Compiled with -mavx2 only. Must stay bit-identical to scalar.cpp.

#include <immintrin.h>

#include <cassert>

#include "kernels/philox_constants.hpp"
#include "offlab/kernels.hpp"
#include "offlab/rng.hpp"

namespace offlab::kernels {
namespace {

// 32x32 -> 64 multiply of all eight lanes, split into low and high words.
inline void mulhilo8(__m256i x, __m256i m, __m256i& lo, __m256i& hi) {
  const __m256i even = _mm256_mul_epu32(x, m);
  const __m256i odd = _mm256_mul_epu32(_mm256_srli_epi64(x, 32), m);
  lo = _mm256_blend_epi32(even, _mm256_slli_epi64(odd, 32), 0xAA);
  hi = _mm256_blend_epi32(_mm256_srli_epi64(even, 32), odd, 0xAA);
}

void philox_blocks_avx2(PhiloxKey key, std::uint32_t stream, std::uint64_t path,
                        std::uint32_t first_block, std::span<std::uint32_t> out) {
  using namespace detail;
  assert(out.size() % 4 == 0);
  const std::size_t n_blocks = out.size() / 4;
  const auto path_lo = static_cast<std::uint32_t>(path);
  const auto path_hi = static_cast<std::uint32_t>(path >> 32);
  const __m256i m0 = _mm256_set1_epi32(static_cast<int>(kPhiloxM0));
  const __m256i m1 = _mm256_set1_epi32(static_cast<int>(kPhiloxM1));
  const __m256i lane = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);

  std::size_t b = 0;
  alignas(32) std::uint32_t w[4][8];
  for (; b + 8 <= n_blocks; b += 8) {
    __m256i x0 = _mm256_add_epi32(
        _mm256_set1_epi32(static_cast<int>(first_block + static_cast<std::uint32_t>(b))), lane);
    __m256i x1 = _mm256_set1_epi32(static_cast<int>(stream));
    __m256i x2 = _mm256_set1_epi32(static_cast<int>(path_lo));
    __m256i x3 = _mm256_set1_epi32(static_cast<int>(path_hi));
    std::uint32_t k0 = key.k0;
    std::uint32_t k1 = key.k1;
    for (int round = 0; round < kPhiloxRounds; ++round) {
      __m256i lo0, hi0, lo1, hi1;
      mulhilo8(x0, m0, lo0, hi0);
      mulhilo8(x2, m1, lo1, hi1);
      const __m256i kk0 = _mm256_set1_epi32(static_cast<int>(k0));
      const __m256i kk1 = _mm256_set1_epi32(static_cast<int>(k1));
      x0 = _mm256_xor_si256(_mm256_xor_si256(hi1, x1), kk0);
      x1 = lo1;
      x2 = _mm256_xor_si256(_mm256_xor_si256(hi0, x3), kk1);
      x3 = lo0;
      k0 += kPhiloxW0;
      k1 += kPhiloxW1;
    }
    _mm256_store_si256(reinterpret_cast<__m256i*>(w[0]), x0);
    _mm256_store_si256(reinterpret_cast<__m256i*>(w[1]), x1);
    _mm256_store_si256(reinterpret_cast<__m256i*>(w[2]), x2);
    _mm256_store_si256(reinterpret_cast<__m256i*>(w[3]), x3);
    std::uint32_t* dst = out.data() + 4 * b;
    for (int i = 0; i < 8; ++i) {
      dst[4 * i + 0] = w[0][i];
      dst[4 * i + 1] = w[1][i];
      dst[4 * i + 2] = w[2][i];
      dst[4 * i + 3] = w[3][i];
    }
  }
  for (; b < n_blocks; ++b) {
    const auto block = philox4x32_10(
        {first_block + static_cast<std::uint32_t>(b), stream, path_lo, path_hi}, key);
    for (int i = 0; i < 4; ++i) out[4 * b + i] = block[i];
  }
}

void affine_avx2(std::span<const double> in, double shift, double scale,
                 std::span<double> out) {
  assert(out.size() >= in.size());
  const __m256d vs = _mm256_set1_pd(scale);
  const __m256d vb = _mm256_set1_pd(shift);
  std::size_t i = 0;
  for (; i + 4 <= in.size(); i += 4) {
    const __m256d v = _mm256_loadu_pd(in.data() + i);
    _mm256_storeu_pd(out.data() + i, _mm256_add_pd(vb, _mm256_mul_pd(vs, v)));
  }
  for (; i < in.size(); ++i) out[i] = shift + scale * in[i];
}

inline double combine(__m256d acc) {
  const __m128d pair = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
  return _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
}

void block_moments_avx2(std::span<const double> x, std::size_t block_len,
                        std::span<double> sums, std::span<double> sumsq) {
  assert(x.size() >= block_len * sums.size());
  const std::size_t body = block_len & ~std::size_t{3};
  for (std::size_t k = 0; k < sums.size(); ++k) {
    const double* v = x.data() + k * block_len;
    __m256d p = _mm256_setzero_pd();
    __m256d q = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4) {
      const __m256d a = _mm256_loadu_pd(v + i);
      p = _mm256_add_pd(p, a);
      q = _mm256_add_pd(q, _mm256_mul_pd(a, a));
    }
    double s = combine(p);
    double s2 = combine(q);
    for (std::size_t i = body; i < block_len; ++i) {
      const double sq = v[i] * v[i];
      s += v[i];
      s2 += sq;
    }
    sums[k] = s;
    sumsq[k] = s2;
  }
}

void strided_moments_avx2(std::span<const double> x, std::span<double> sums,
                          std::span<double> sumsq) {
  const std::size_t width = sums.size();
  assert(width > 0 && x.size() % width == 0);
  for (std::size_t j = 0; j < width; ++j) {
    sums[j] = 0.0;
    sumsq[j] = 0.0;
  }
  const std::size_t body = width & ~std::size_t{3};
  for (std::size_t row = 0; row < x.size() / width; ++row) {
    const double* v = x.data() + row * width;
    std::size_t j = 0;
    for (; j < body; j += 4) {
      const __m256d a = _mm256_loadu_pd(v + j);
      _mm256_storeu_pd(sums.data() + j, _mm256_add_pd(_mm256_loadu_pd(sums.data() + j), a));
      _mm256_storeu_pd(sumsq.data() + j,
                       _mm256_add_pd(_mm256_loadu_pd(sumsq.data() + j), _mm256_mul_pd(a, a)));
    }
    for (; j < width; ++j) {
      const double sq = v[j] * v[j];
      sums[j] += v[j];
      sumsq[j] += sq;
    }
  }
}

}  // namespace

const KernelTable& avx2_table_impl() noexcept {
  static const KernelTable table{"avx2", philox_blocks_avx2, affine_avx2, block_moments_avx2,
                                 strided_moments_avx2};
  return table;
}

}  // namespace offlab::kernels
