#include "offlab/rng.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace offlab {
namespace {

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

inline double open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * kTwoPow53Inv;
}

}  // namespace

std::array<double, 2> box_muller(std::uint32_t w0, std::uint32_t w1, std::uint32_t w2,
                                 std::uint32_t w3) noexcept {
  const double u1 = open_unit((std::uint64_t{w1} << 32) | w0);
  const double u2 = open_unit((std::uint64_t{w3} << 32) | w2);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t path, std::uint32_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream),
      path_(path) {}

void CounterRng::refill() noexcept {
  buffer_ = philox4x32_10({block_++, stream_, static_cast<std::uint32_t>(path_),
                           static_cast<std::uint32_t>(path_ >> 32)},
                          key_);
  used_ = 0;
}

std::uint32_t CounterRng::next_u32() noexcept {
  if (used_ == 4) refill();
  return buffer_[used_++];
}

std::uint64_t CounterRng::next_u64() noexcept {
  const std::uint64_t lo = next_u32();
  return (std::uint64_t{next_u32()} << 32) | lo;
}

double CounterRng::uniform() noexcept { return open_unit(next_u64()); }

std::uint32_t CounterRng::below(std::uint32_t bound) noexcept {
  // Lemire's multiply-and-reject.
  std::uint64_t m = std::uint64_t{next_u32()} * bound;
  auto low = static_cast<std::uint32_t>(m);
  if (low < bound) {
    const std::uint32_t threshold = (0u - bound) % bound;
    while (low < threshold) {
      m = std::uint64_t{next_u32()} * bound;
      low = static_cast<std::uint32_t>(m);
    }
  }
  return static_cast<std::uint32_t>(m >> 32);
}

double CounterRng::normal() noexcept {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const auto block = philox4x32_10({block_++, stream_, static_cast<std::uint32_t>(path_),
                                    static_cast<std::uint32_t>(path_ >> 32)},
                                   key_);
  used_ = 4;  // a normal pair never shares a block with integer draws
  const auto pair = box_muller(block[0], block[1], block[2], block[3]);
  cached_normal_ = pair[1];
  has_cached_ = true;
  return pair[0];
}

void CounterRng::fill_normal(std::span<double> out) {
  has_cached_ = false;
  used_ = 4;
  const std::size_t n_blocks = (out.size() + 1) / 2;
  thread_local std::vector<std::uint32_t> words;
  words.resize(4 * n_blocks);
  kernels::active().philox_blocks(key_, stream_, path_, block_, words);
  block_ += static_cast<std::uint32_t>(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const auto pair = box_muller(words[4 * b], words[4 * b + 1], words[4 * b + 2],
                                 words[4 * b + 3]);
    out[2 * b] = pair[0];
    if (2 * b + 1 < out.size()) out[2 * b + 1] = pair[1];
  }
}

}  // namespace offlab
