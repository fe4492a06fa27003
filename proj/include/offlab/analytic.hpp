#pragma once

#include <optional>
#include <string>
#include <vector>

#include "offlab/params.hpp"

namespace offlab {

/// Tail masses of the conditioned density below this are not resolvable in
/// double precision; conditional means there raise unreliable_tail.
inline constexpr double kTailFloor = 1e-250;

/// Closed-form outputs for one parameter point. poof and e_srm_given_accept
/// are absent when the original realization clears the threshold almost
/// surely (no tweak is ever attempted).
struct OverfitReport {
  double p_clear = 0.0;
  double e_sr_given_clear = 0.0;
  std::optional<double> poof;
  std::optional<double> e_srm_given_accept;
  double e_in = 0.0;
  double e_out = 0.0;
  double off = 0.0;
  double poa = 0.0;
  double off_asymptote = 0.0;
};

struct TruncatedMean {
  double value = 0.0;
  bool asymptotic = false;  // survival function underflowed
};

/// P(SR > theta) with SR ~ N(sr_true, sigma_tot).
double prob_clear(const ModelParams& params);

/// E[X | X > lower] for X ~ N(mean, sd).
TruncatedMean truncated_normal_mean_above(double mean, double sd, double lower);

/// Density of the tweaked Sharpe conditioned on the original realization
/// missing the threshold. Requires 0 < f < 1.
double rho_pdf(double y, const ModelParams& params);

/// Integral of rho over the whole line (should be 1).
double rho_normalization(const ModelParams& params);

/// Mean of rho over the whole line.
double rho_mean(const ModelParams& params);

/// PoOF: integral of rho above theta.
double rho_tail_prob(const ModelParams& params);

/// E_rho[SR_m | SR_m > theta].
double rho_tail_mean(const ModelParams& params);

OverfitReport overfit_report(const ModelParams& params);

/// Non-fatal remarks about a parameter point (f outside the range the model
/// is meant for, or a denominator that can change sign).
std::vector<std::string> advisories(const ModelParams& params);

enum class Sides { one, two };

/// Backtest length for which a Sharpe of `sr` is distinguishable from zero at
/// `confidence`, with sigma_SR = 1/sqrt(T).
double min_backtest_years(double sr, double confidence, Sides sides = Sides::two);

}  // namespace offlab
