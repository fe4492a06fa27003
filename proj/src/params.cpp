#include "offlab/params.hpp"

#include <cmath>
#include <sstream>

#include "offlab/error.hpp"

namespace offlab {
namespace {

[[noreturn]] void invalid(const char* field, const char* constraint, double value) {
  std::ostringstream msg;
  msg << field << " must satisfy " << constraint << " (got " << value << ")";
  fail(ErrorKind::invalid_parameter, msg.str());
}

}  // namespace

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid_parameter";
    case ErrorKind::degenerate_correlation: return "degenerate_correlation";
    case ErrorKind::flip_count_too_small: return "flip_count_too_small";
    case ErrorKind::slice_too_thin: return "slice_too_thin";
    case ErrorKind::domain: return "domain";
    case ErrorKind::unreliable_tail: return "unreliable_tail";
    case ErrorKind::quadrature: return "quadrature";
    case ErrorKind::degenerate_series: return "degenerate_series";
    case ErrorKind::undefined_off: return "undefined_off";
    case ErrorKind::attempts_exhausted: return "attempts_exhausted";
  }
  return "unknown";
}

void ModelParams::validate() const {
  if (!std::isfinite(sr_true)) invalid("sr_true", "finite", sr_true);
  if (!std::isfinite(theta)) invalid("theta", "finite", theta);
  if (!(t_years > 0.0) || !std::isfinite(t_years)) invalid("t_years", "t_years > 0", t_years);
  if (days_per_year < 1) invalid("days_per_year", "days_per_year >= 1", days_per_year);
  if (!(f >= 0.0 && f <= 1.0)) invalid("f", "0 <= f <= 1", f);
}

void ModelParams::validate_open_f() const {
  validate();
  if (f == 0.0 || f == 1.0) {
    std::ostringstream msg;
    msg << "f must satisfy 0 < f < 1 (got " << f
        << "): at f = 0 or 1 the tweaked Sharpe is perfectly (anti)correlated with "
           "the original and has no density; use the f -> 0 limit (PoOF = 0) or "
           "f = 1 (SR_m = -SR) directly";
    fail(ErrorKind::degenerate_correlation, msg.str());
  }
}

SharpeNoise sharpe_noise_scale(const ModelParams& params) {
  params.validate();
  double factor = 1.0;
  if (params.include_sr_correction) {
    const double daily = params.sr_daily();
    factor += 0.5 * daily * daily;
  }
  return SharpeNoise{std::sqrt(factor / params.t_years)};
}

}  // namespace offlab
