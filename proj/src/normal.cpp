#include "offlab/normal.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "offlab/error.hpp"

namespace offlab::normal {

double pdf(double z) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double pdf(double x, double mean, double sd) noexcept {
  return pdf((x - mean) / sd) / sd;
}

double cdf(double z) noexcept {
  if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
  return 0.5 * std::erfc(-z / kSqrt2);
}

double cdf(double x, double mean, double sd) noexcept {
  return cdf((x - mean) / sd);
}

double sf(double z) noexcept {
  if (std::isinf(z)) return z > 0 ? 0.0 : 1.0;
  return 0.5 * std::erfc(z / kSqrt2);
}

double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    fail(ErrorKind::invalid_parameter,
         "normal quantile needs p in (0, 1), got " + std::to_string(p));
  }
  return boost::math::quantile(boost::math::normal_distribution<double>{}, p);
}

double inverse_mills(double z) noexcept {
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  const double tail = sf(z);
  if (tail > 1e-290) return pdf(z) / tail;
  // 1/R(z) = z + 1/(z + 2/(z + 3/(z + ...))), evaluated bottom-up. Only
  // reached for z > 35, where 30 terms are far beyond double precision.
  double frac = z;
  for (int k = 30; k >= 1; --k) frac = z + k / frac;
  return frac;
}

}  // namespace offlab::normal
