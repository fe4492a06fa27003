#pragma once

// Standard normal helpers. The CDF is built on erfc so that both tails keep
// full relative precision; tail ratios drive the truncated-mean terms.

namespace offlab::normal {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kSqrt2 = 1.41421356237309504880;

double pdf(double z) noexcept;
double pdf(double x, double mean, double sd) noexcept;

/// P(Z <= z).
double cdf(double z) noexcept;
double cdf(double x, double mean, double sd) noexcept;

/// P(Z > z), accurate where cdf(z) rounds to 1.
double sf(double z) noexcept;

/// Inverse of cdf; p must lie in (0, 1).
double quantile(double p);

/// phi(z) / (1 - Phi(z)). Falls back to the asymptotic continued fraction
/// once the survival function underflows.
double inverse_mills(double z) noexcept;

}  // namespace offlab::normal
