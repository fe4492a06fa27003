#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "offlab/params.hpp"
#include "offlab/rng.hpp"

namespace offlab {

enum class SimMode {
  path_level,      // simulate daily returns, then slice them
  gaussian_slice,  // draw slice Sharpes directly from N(sr_true, sqrt(N) sigma_tot)
};

enum class SliceScheme {
  contiguous,         // chronological blocks
  strided,            // day d goes to bucket d mod N (weekday-style grouping)
  random_assignment,  // uniformly random equal-size partition of the days
};

/// How a path-level slice Sharpe is normalized. `pooled` divides each
/// slice's mean by the full-path volatility, making the average of slice
/// Sharpes equal the realized Sharpe exactly; `per_slice` uses each slice's
/// own volatility (the average is then only approximately the realized one).
enum class SliceVol { pooled, per_slice };

/// What a rebinning under the until-clear policy produces. `fresh` draws a
/// new underlying realization, conditioned to miss the threshold, before
/// flipping; `same_path` reassigns the days of the original realization.
enum class RebinModel { fresh, same_path };

struct PathConfig {
  ModelParams model;
  int n_buckets = 40;
  double daily_vol = 0.01;
  std::uint64_t seed = 0;
  SimMode mode = SimMode::gaussian_slice;
  SliceVol slice_vol = SliceVol::pooled;
  int min_days_per_slice = 20;
  unsigned workers = 0;  // 0: one per hardware thread

  void validate() const;
  /// round(t_years * days_per_year).
  std::size_t total_days() const;
  /// total_days() truncated to a multiple of n_buckets.
  std::size_t usable_days() const;
};

/// Number of slices a tweak flips: round(f * n) with ties rounding up.
/// Throws flip_count_too_small when that is zero.
int flip_count(int n_buckets, double f);

struct SliceSet {
  std::vector<double> slice_sharpes;
  std::vector<int> flip_mask;  // sorted 0-based slice indices
  double original_sr = 0.0;
  double modified_sr = 0.0;

  /// Sets the mask and recomputes modified_sr = original_sr - (2/N) sum_mask SR_i.
  void apply_flips(std::vector<int> mask);
};

std::vector<double> simulate_daily_pnl(const PathConfig& config, std::uint64_t path_index = 0);

/// mean / population std, annualized. Throws degenerate_series for a
/// constant series or fewer than two values.
double realized_sharpe(std::span<const double> returns, int days_per_year);

struct SliceOptions {
  SliceScheme scheme = SliceScheme::contiguous;
  SliceVol vol = SliceVol::per_slice;
  int days_per_year = 252;
  int min_days_per_slice = 20;
};

/// Splits the series (truncated to a multiple of n_buckets) into buckets and
/// computes one annualized Sharpe per bucket. rng is consulted only by
/// random_assignment. The returned set has an empty mask.
SliceSet slice_sharpes(std::span<const double> returns, int n_buckets, const SliceOptions& options,
                       CounterRng& rng);

/// Uniformly random subset of flip_count(n, f) slice indices, sorted.
std::vector<int> choose_flips_random(int n_buckets, double f, CounterRng& rng);

struct MaximalFlips {
  std::vector<int> mask;
  bool improves = false;  // the flipped trajectory beats the original
};

/// The flip_count(N, f) slices with the smallest Sharpes (ties: lower index
/// first), which maximizes the modified Sharpe among masks of that size.
MaximalFlips choose_flips_maximal(std::span<const double> slice_sharpes, double f);

/// N independent slice Sharpes from N(sr_true, sqrt(N) sigma_tot).
SliceSet sample_slice_sharpes_gaussian(const ModelParams& params, int n_buckets, CounterRng& rng);

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

struct McResult {
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::string policy;
  double effective_f = 0.0;  // flip_count / N
  std::size_t conditioned_paths = 0;
  std::size_t exhausted_paths = 0;
  std::map<std::string, Estimate> estimates;
  std::map<std::uint64_t, std::uint64_t> attempts_histogram;
  std::vector<std::string> absent;  // metrics that could not be estimated

  bool has(const std::string& metric) const { return estimates.contains(metric); }
  const Estimate& at(const std::string& metric) const { return estimates.at(metric); }
};

/// One tweak for every path that misses theta. Estimates p_clear, poof,
/// poa, mean_sr, sd_sr and corr_sr_srm (the tweak is also applied to paths
/// that clear, for the correlation only).
McResult run_one_off(const PathConfig& config, std::size_t n_paths);

/// Tweak until the threshold is cleared. Estimates p_clear, e_in, e_out,
/// off and mean_attempts. Throws attempts_exhausted when more than 0.1% of
/// paths hit max_attempts.
McResult run_until_clear(const PathConfig& config, std::size_t n_paths,
                         std::uint64_t max_attempts = 10000,
                         RebinModel rebin = RebinModel::fresh);

/// Paths that miss theta take the maximally-overfitted trajectory of their
/// contiguous binning (if it improves on the original). Estimates p_clear,
/// p_mo_clears, e_in, e_out, off.
McResult run_maximal(const PathConfig& config, std::size_t n_paths);

}  // namespace offlab
