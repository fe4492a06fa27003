#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "offlab/kernels.hpp"

namespace offlab {

using PhiloxCounter = std::array<std::uint32_t, 4>;

/// One Philox4x32-10 block: counter encrypted under a 64-bit key.
PhiloxCounter philox4x32_10(PhiloxCounter counter, kernels::PhiloxKey key) noexcept;

/// Named substreams of a path. Each (seed, path, stream) triple addresses an
/// independent sequence, so a path's draws never depend on scheduling.
enum class Stream : std::uint32_t {
  returns = 0,    // original realization
  tweaks = 1,     // flip masks and bucket assignments
  rebin = 2,      // fresh realizations drawn by until-clear
};

/// Counter-based generator: block i of the sequence is
/// Philox(key = seed, counter = {i, stream, path_lo, path_hi}).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t path, Stream stream) noexcept
      : CounterRng(seed, path, static_cast<std::uint32_t>(stream)) {}
  CounterRng(std::uint64_t seed, std::uint64_t path, std::uint32_t stream) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Uniform integer in [0, bound), bound > 0, without modulo bias.
  std::uint32_t below(std::uint32_t bound) noexcept;

  /// Standard normal by Box-Muller. Each pair consumes one fresh block, so
  /// repeated normal() calls reproduce fill_normal().
  double normal() noexcept;

  /// Fills out with standard normals, starting at the next unused block.
  void fill_normal(std::span<double> out);

  std::uint32_t next_block() const noexcept { return block_; }

 private:
  void refill() noexcept;

  kernels::PhiloxKey key_;
  std::uint32_t stream_;
  std::uint64_t path_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Box-Muller pair from one Philox block.
std::array<double, 2> box_muller(std::uint32_t w0, std::uint32_t w1, std::uint32_t w2,
                                 std::uint32_t w3) noexcept;

}  // namespace offlab
