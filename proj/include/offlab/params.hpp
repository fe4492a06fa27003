#pragma once

#include <cmath>

namespace offlab {

/// Parameters of the drifted-Brownian PnL model and the researcher's
/// tweak process. Sharpe ratios are annualized.
struct ModelParams {
  double sr_true = 0.4;  // drift / volatility of the generating process
  double theta = 0.7;    // Sharpe threshold a strategy must clear
  double f = 0.05;       // fraction of slices whose sign a tweak flips
  double t_years = 20.0;
  int days_per_year = 252;
  bool include_sr_correction = true;  // keep the SR_daily^2 / 2 term

  double flip_correlation() const noexcept { return 1.0 - 2.0 * f; }
  double sr_daily() const noexcept {
    return sr_true / std::sqrt(static_cast<double>(days_per_year));
  }

  /// Throws Error(invalid_parameter) naming the offending field.
  void validate() const;

  /// validate() plus 0 < f < 1, the range where the tweaked Sharpe has a
  /// non-degenerate joint law with the original one.
  void validate_open_f() const;
};

/// Sampling noise of the Sharpe estimate. Slicing the backtest into N
/// buckets scales the per-slice variance by N.
struct SharpeNoise {
  double sigma_tot = 0.0;

  double sigma_slice(int n_buckets) const noexcept {
    return std::sqrt(static_cast<double>(n_buckets)) * sigma_tot;
  }
  double variance_slice(int n_buckets) const noexcept {
    return static_cast<double>(n_buckets) * sigma_tot * sigma_tot;
  }
};

SharpeNoise sharpe_noise_scale(const ModelParams& params);

}  // namespace offlab
