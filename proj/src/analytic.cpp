#include "offlab/analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "offlab/error.hpp"
#include "offlab/normal.hpp"
#include "offlab/quadrature.hpp"

namespace offlab {
namespace {

constexpr double kWindowSigmas = 12.0;
constexpr quad::Tolerance kBodyTol{1e-12, 1e-10};
// Tail integrals need relative accuracy at any magnitude above kTailFloor.
constexpr quad::Tolerance kTailTol{kTailFloor * 1e-12, 1e-10};

// Everything rho needs, computed once per parameter point.
//
// (SR, SR_m) is bivariate normal with means (sr, r*sr), common sd sigma and
// correlation r = 1 - 2f. rho is the marginal of SR_m given SR < theta:
//   rho(y) = phi(y; r*sr, sigma) * Phi((theta - E[SR | y]) / s_c) / P(SR < theta)
// with E[SR | y] = sr + r*(y - r*sr) and s_c^2 = sigma^2 (1 - r^2) = 4 sigma^2 f(1-f).
struct Conditioned {
  double sr, theta, r, sigma, s_c, p_below;
  double lo, hi;                       // window holding rho's mass
  std::array<double, 3> breaks;

  double pdf(double y) const {
    const double arg = (theta - sr + r * (r * sr - y)) / s_c;
    return normal::pdf(y, r * sr, sigma) * normal::cdf(arg) / p_below;
  }
};

Conditioned conditioned(const ModelParams& params) {
  params.validate_open_f();
  const double sigma = sharpe_noise_scale(params).sigma_tot;
  Conditioned c{};
  c.sr = params.sr_true;
  c.theta = params.theta;
  c.r = params.flip_correlation();
  c.sigma = sigma;
  c.s_c = 2.0 * sigma * std::sqrt(params.f * (1.0 - params.f));
  c.p_below = normal::cdf(params.theta, params.sr_true, sigma);
  if (!(c.p_below > 0.0)) {
    std::ostringstream msg;
    msg << "conditioning event SR < theta has zero probability (theta=" << params.theta
        << ", sr_true=" << params.sr_true << ", sigma_tot=" << sigma << ")";
    fail(ErrorKind::domain, msg.str());
  }
  // The conditioned SR lives in [s_lo, s_hi]; given SR = s, SR_m has mean r*s
  // and sd s_c <= sigma.
  const double s_hi = std::min(params.theta, params.sr_true + kWindowSigmas * sigma);
  const double s_lo = std::min(params.theta, params.sr_true) - kWindowSigmas * sigma;
  c.lo = std::min(c.r * s_lo, c.r * s_hi) - kWindowSigmas * sigma;
  c.hi = std::max(c.r * s_lo, c.r * s_hi) + kWindowSigmas * sigma;
  // Phi's argument crosses zero at y_step; for small f that is a near-jump.
  const double y_step = c.r != 0.0 ? c.r * c.sr + (c.theta - c.sr) / c.r : c.theta;
  c.breaks = {c.theta, y_step, c.r * std::min(c.theta, c.sr)};
  return c;
}

double checked(const quad::Result& res, const char* what) {
  if (!res.converged || !std::isfinite(res.value)) {
    std::ostringstream msg;
    msg << what << ": quadrature did not converge (value=" << res.value
        << ", error=" << res.error << ", intervals=" << res.intervals
        << ", evaluations=" << res.evaluations << ")";
    fail(ErrorKind::quadrature, msg.str());
  }
  return res.value;
}

double tail_upper(const Conditioned& c) {
  return std::max(c.hi, c.theta + kWindowSigmas * c.sigma);
}

double tail_mass(const Conditioned& c) {
  const double top = tail_upper(c);
  if (c.theta >= top) return 0.0;
  auto res = quad::integrate([&](double y) { return c.pdf(y); }, c.theta, top, kTailTol,
                             c.breaks);
  return std::clamp(checked(res, "rho_tail_prob"), 0.0, 1.0);
}

}  // namespace

double prob_clear(const ModelParams& params) {
  const double sigma = sharpe_noise_scale(params).sigma_tot;
  return normal::sf((params.theta - params.sr_true) / sigma);
}

TruncatedMean truncated_normal_mean_above(double mean, double sd, double lower) {
  if (!(sd > 0.0) || !std::isfinite(sd)) {
    fail(ErrorKind::invalid_parameter, "sd must satisfy sd > 0");
  }
  if (std::isnan(mean) || std::isnan(lower)) {
    fail(ErrorKind::invalid_parameter, "mean and lower must not be NaN");
  }
  if (lower == -std::numeric_limits<double>::infinity()) return {mean, false};
  const double z = (lower - mean) / sd;
  if (normal::sf(z) > 1e-290) {
    return {mean + sd * normal::pdf(z) / normal::sf(z), false};
  }
  return {lower + sd * sd / (lower - mean), true};
}

double rho_pdf(double y, const ModelParams& params) {
  const Conditioned c = conditioned(params);
  return c.pdf(y);
}

double rho_normalization(const ModelParams& params) {
  const Conditioned c = conditioned(params);
  auto res = quad::integrate([&](double y) { return c.pdf(y); }, c.lo, c.hi, kBodyTol,
                             c.breaks);
  return checked(res, "rho_normalization");
}

double rho_mean(const ModelParams& params) {
  const Conditioned c = conditioned(params);
  const double center = 0.5 * (c.lo + c.hi);
  auto res = quad::integrate([&](double y) { return (y - center) * c.pdf(y); }, c.lo, c.hi,
                             kBodyTol, c.breaks);
  return center + checked(res, "rho_mean");
}

double rho_tail_prob(const ModelParams& params) { return tail_mass(conditioned(params)); }

double rho_tail_mean(const ModelParams& params) {
  const Conditioned c = conditioned(params);
  const double mass = tail_mass(c);
  if (!(mass >= kTailFloor)) {
    std::ostringstream msg;
    msg << "tail mass above theta is " << mass << " (< " << kTailFloor
        << "); the conditional mean is not resolvable";
    fail(ErrorKind::unreliable_tail, msg.str());
  }
  // Integrate the excess over theta so the result is >= theta by construction.
  auto res = quad::integrate([&](double y) { return (y - c.theta) * c.pdf(y); }, c.theta,
                             tail_upper(c), kTailTol, c.breaks);
  return c.theta + std::max(0.0, checked(res, "rho_tail_mean")) / mass;
}

OverfitReport overfit_report(const ModelParams& params) {
  params.validate_open_f();
  const double sigma = sharpe_noise_scale(params).sigma_tot;
  const double r = params.flip_correlation();
  const double z = (params.theta - params.sr_true) / sigma;

  OverfitReport rep;
  rep.p_clear = normal::sf(z);
  const double p_below = normal::cdf(z);
  rep.e_sr_given_clear = truncated_normal_mean_above(params.sr_true, sigma, params.theta).value;

  rep.e_in = rep.p_clear * rep.e_sr_given_clear;
  rep.e_out = rep.p_clear * params.sr_true;
  if (p_below > 0.0) {
    rep.poof = rho_tail_prob(params);
    rep.e_srm_given_accept = rho_tail_mean(params);
    rep.e_in += p_below * *rep.e_srm_given_accept;
    rep.e_out += p_below * r * params.sr_true;
  }
  rep.poa = rep.p_clear + (1.0 - rep.p_clear) * rep.poof.value_or(0.0);

  if (rep.e_out == 0.0) {
    std::ostringstream msg;
    msg << "expected out-of-sample Sharpe is zero (sr_true=" << params.sr_true
        << ", f=" << params.f << "); OFF is undefined";
    fail(ErrorKind::undefined_off, msg.str());
  }
  rep.off = rep.e_in / rep.e_out;
  rep.off_asymptote = params.theta / (r * params.sr_true);
  return rep;
}

std::vector<std::string> advisories(const ModelParams& params) {
  std::vector<std::string> out;
  if (params.f > 0.1) {
    out.emplace_back("f > 0.1: a tweak leaves the strategy less than 80% correlated with "
                     "the original");
  }
  if (params.f >= 0.5 && params.sr_true > 0.0) {
    out.emplace_back("f >= 0.5: the out-of-sample Sharpe (1-2f)*sr_true is non-positive; "
                     "OFF may be undefined or negative");
  }
  return out;
}

double min_backtest_years(double sr, double confidence, Sides sides) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    fail(ErrorKind::invalid_parameter, "confidence must satisfy 0 < confidence < 1");
  }
  if (!std::isfinite(sr) || sr == 0.0) {
    fail(ErrorKind::invalid_parameter, "sr must be finite and non-zero");
  }
  const double p = sides == Sides::two ? 1.0 - 0.5 * (1.0 - confidence) : confidence;
  const double z = normal::quantile(p);
  return (z / sr) * (z / sr);
}

}  // namespace offlab
