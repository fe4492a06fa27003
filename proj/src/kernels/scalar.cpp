#include <cassert>

#include "kernels/philox_constants.hpp"
#include "offlab/kernels.hpp"
#include "offlab/rng.hpp"

namespace offlab {

PhiloxCounter philox4x32_10(PhiloxCounter x, kernels::PhiloxKey key) noexcept {
  using namespace kernels::detail;
  std::uint32_t k0 = key.k0;
  std::uint32_t k1 = key.k1;
  for (int round = 0; round < kPhiloxRounds; ++round) {
    const std::uint64_t p0 = std::uint64_t{kPhiloxM0} * x[0];
    const std::uint64_t p1 = std::uint64_t{kPhiloxM1} * x[2];
    x = {static_cast<std::uint32_t>(p1 >> 32) ^ x[1] ^ k0, static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ x[3] ^ k1, static_cast<std::uint32_t>(p0)};
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return x;
}

namespace kernels {
namespace {

void philox_blocks_scalar(PhiloxKey key, std::uint32_t stream, std::uint64_t path,
                          std::uint32_t first_block, std::span<std::uint32_t> out) {
  assert(out.size() % 4 == 0);
  const auto path_lo = static_cast<std::uint32_t>(path);
  const auto path_hi = static_cast<std::uint32_t>(path >> 32);
  for (std::size_t b = 0; b < out.size() / 4; ++b) {
    const auto block = philox4x32_10(
        {first_block + static_cast<std::uint32_t>(b), stream, path_lo, path_hi}, key);
    for (int w = 0; w < 4; ++w) out[4 * b + w] = block[w];
  }
}

void affine_scalar(std::span<const double> in, double shift, double scale,
                   std::span<double> out) {
  assert(out.size() >= in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = shift + scale * in[i];
}

void block_moments_scalar(std::span<const double> x, std::size_t block_len,
                          std::span<double> sums, std::span<double> sumsq) {
  assert(x.size() >= block_len * sums.size());
  const std::size_t body = block_len & ~std::size_t{3};
  for (std::size_t k = 0; k < sums.size(); ++k) {
    const double* v = x.data() + k * block_len;
    double p[4] = {0.0, 0.0, 0.0, 0.0};
    double q[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < body; i += 4) {
      for (int j = 0; j < 4; ++j) {
        const double sq = v[i + j] * v[i + j];
        p[j] += v[i + j];
        q[j] += sq;
      }
    }
    double s = (p[0] + p[2]) + (p[1] + p[3]);
    double s2 = (q[0] + q[2]) + (q[1] + q[3]);
    for (std::size_t i = body; i < block_len; ++i) {
      const double sq = v[i] * v[i];
      s += v[i];
      s2 += sq;
    }
    sums[k] = s;
    sumsq[k] = s2;
  }
}

void strided_moments_scalar(std::span<const double> x, std::span<double> sums,
                            std::span<double> sumsq) {
  const std::size_t width = sums.size();
  assert(width > 0 && x.size() % width == 0);
  for (std::size_t j = 0; j < width; ++j) {
    sums[j] = 0.0;
    sumsq[j] = 0.0;
  }
  for (std::size_t row = 0; row < x.size() / width; ++row) {
    const double* v = x.data() + row * width;
    for (std::size_t j = 0; j < width; ++j) {
      const double sq = v[j] * v[j];
      sums[j] += v[j];
      sumsq[j] += sq;
    }
  }
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{"scalar", philox_blocks_scalar, affine_scalar,
                                 block_moments_scalar, strided_moments_scalar};
  return table;
}

}  // namespace kernels
}  // namespace offlab
