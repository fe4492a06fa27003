#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "offlab/analytic.hpp"
#include "offlab/error.hpp"
#include "oracle/bivariate_oracle.hpp"

using namespace offlab;

namespace {

ModelParams point(double sr, double theta, double f, double t, bool correction = false) {
  ModelParams p;
  p.sr_true = sr;
  p.theta = theta;
  p.f = f;
  p.t_years = t;
  p.include_sr_correction = correction;
  return p;
}

oracle::BivariateOracle oracle_for(const ModelParams& p) {
  return {p.sr_true, p.theta, p.f, sharpe_noise_scale(p).sigma_tot};
}

template <class Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an offlab::Error");
  return ErrorKind::quadrature;
}

}  // namespace

TEST_CASE("noise scale") {
  CHECK(sharpe_noise_scale(point(0.4, 0.7, 0.05, 1.0)).sigma_tot == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sharpe_noise_scale(point(0.4, 0.7, 0.05, 20.0)).sigma_tot ==
        doctest::Approx(0.22360679774997896).epsilon(1e-15));
  // With the daily correction: sqrt((1 + SR_d^2 / 2) / T), SR_d = 0.5 / sqrt(252).
  CHECK(sharpe_noise_scale(point(0.5, 0.7, 0.05, 43.3, true)).sigma_tot ==
        doctest::Approx(0.152007052205586).epsilon(1e-13));

  const auto noise = sharpe_noise_scale(point(0.4, 0.7, 0.05, 20.0));
  for (int n : {1, 7, 40, 252}) {
    CHECK(noise.variance_slice(n) == n * noise.sigma_tot * noise.sigma_tot);
    CHECK(noise.sigma_slice(n) * noise.sigma_slice(n) ==
          doctest::Approx(noise.variance_slice(n)).epsilon(1e-15));
  }
  CHECK(kind_of([] { sharpe_noise_scale(point(0.4, 0.7, 0.05, 0.0)); }) == ErrorKind::invalid_parameter);
  CHECK(kind_of([] { sharpe_noise_scale(point(0.4, 0.7, 0.05, -1.0)); }) == ErrorKind::invalid_parameter);
}

TEST_CASE("prob_clear") {
  CHECK(prob_clear(point(0.7, 0.7, 0.05, 20.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(prob_clear(point(0.4, -1e6, 0.05, 20.0)) == 1.0);
  CHECK(prob_clear(point(0.4, 0.7, 0.05, 20.0)) == doctest::Approx(0.0898562474395).epsilon(1e-12));
  // Independent check against Boost.
  const boost::math::normal dist(0.3, 1.0 / std::sqrt(10.0));
  CHECK(prob_clear(point(0.3, 0.7, 0.025, 10.0)) ==
        doctest::Approx(boost::math::cdf(boost::math::complement(dist, 0.7))).epsilon(1e-13));
}

TEST_CASE("truncated normal mean") {
  CHECK(truncated_normal_mean_above(0.0, 1.0, -INFINITY).value == 0.0);
  CHECK(truncated_normal_mean_above(0.0, 1.0, 0.0).value ==
        doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-15));
  CHECK(truncated_normal_mean_above(0.4, 0.223607, 0.7).value ==
        doctest::Approx(0.803628575453401).epsilon(1e-12));

  // Direct quadrature of x phi / sf.
  const boost::math::normal dist(0.4, 0.223607);
  auto num = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double x) { return x * boost::math::pdf(dist, x); }, 0.7, INFINITY, 15, 1e-14);
  CHECK(truncated_normal_mean_above(0.4, 0.223607, 0.7).value ==
        doctest::Approx(num / boost::math::cdf(boost::math::complement(dist, 0.7))).epsilon(1e-11));

  // Far tail: finite, flagged, close to lower + sd^2 / (lower - mean).
  const auto far = truncated_normal_mean_above(0.0, 1.0, 50.0);
  CHECK(std::isfinite(far.value));
  CHECK(far.value == doctest::Approx(50.0 + 1.0 / 50.0).epsilon(1e-6));
  const auto very_far = truncated_normal_mean_above(0.0, 1.0, 60.0);
  CHECK(very_far.asymptotic);
  CHECK_FALSE(truncated_normal_mean_above(0.0, 1.0, 2.0).asymptotic);

  double previous = -INFINITY;
  for (double lower = -6.0; lower < 60.0; lower += 0.37) {
    const double m = truncated_normal_mean_above(0.2, 1.5, lower).value;
    CHECK(m >= std::max(0.2, lower));
    CHECK(m >= previous);
    previous = m;
  }
  CHECK(kind_of([] { truncated_normal_mean_above(0.0, 0.0, 1.0); }) == ErrorKind::invalid_parameter);
  CHECK(kind_of([] { truncated_normal_mean_above(0.0, -1.0, 1.0); }) == ErrorKind::invalid_parameter);
}

TEST_CASE("rho reduces to the unconditioned law when the threshold is unreachable") {
  const auto p = point(0.4, 50.0, 0.05, 20.0);
  const double sigma = sharpe_noise_scale(p).sigma_tot;
  for (double y : {-0.5, 0.0, 0.2, 0.38, 0.7, 1.1}) {
    const double expected = boost::math::pdf(boost::math::normal(0.9 * 0.4, sigma), y);
    CHECK(rho_pdf(y, p) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("rho frozen values and oracle agreement at the reference point") {
  const auto p = point(0.4, 0.7, 0.05, 20.0);
  CHECK(rho_pdf(0.36, p) == doctest::Approx(1.95822329603808).epsilon(1e-11));
  CHECK(rho_normalization(p) == doctest::Approx(1.0).epsilon(1e-10));
  const auto o = oracle_for(p);
  for (double y : {-0.3, 0.1, 0.36, 0.69, 0.71, 1.0}) {
    CHECK(rho_pdf(y, p) == doctest::Approx(o.rho(y)).epsilon(1e-9));
  }
  CHECK(rho_tail_prob(p) == doctest::Approx(0.016011981576).epsilon(1e-9));
  CHECK(rho_tail_prob(p) == doctest::Approx(o.tail_prob()).epsilon(1e-8));
  CHECK(rho_tail_mean(p) == doctest::Approx(o.tail_mean()).epsilon(1e-8));
}

TEST_CASE("rho is a density and its mean sits below the unconditioned mean") {
  std::mt19937_64 gen(20261015);
  std::uniform_real_distribution<double> sr(0.05, 1.0), theta(0.2, 1.5), f(0.01, 0.45), t(2.0, 80.0);
  for (int i = 0; i < 30; ++i) {
    const auto p = point(sr(gen), theta(gen), f(gen), t(gen), i % 2 == 0);
    CAPTURE(p.sr_true);
    CAPTURE(p.theta);
    CAPTURE(p.f);
    CAPTURE(p.t_years);
    CHECK(rho_normalization(p) == doctest::Approx(1.0).epsilon(1e-9));
    const double unconditioned = p.flip_correlation() * p.sr_true;
    CHECK(rho_mean(p) <= unconditioned + 1e-12);
    if (prob_clear(p) > 1e-3) CHECK(rho_mean(p) < unconditioned);
    for (double y = -2.0; y < 3.0; y += 0.25) CHECK(rho_pdf(y, p) >= 0.0);
    const double tp = rho_tail_prob(p);
    CHECK(tp >= 0.0);
    CHECK(tp <= 1.0);
  }
}

TEST_CASE("rho edge cases") {
  CHECK(kind_of([] { rho_pdf(0.3, point(0.4, 0.7, 0.0, 20.0)); }) == ErrorKind::degenerate_correlation);
  CHECK(kind_of([] { rho_pdf(0.3, point(0.4, 0.7, 1.0, 20.0)); }) == ErrorKind::degenerate_correlation);
  CHECK(kind_of([] { rho_tail_prob(point(0.4, 0.7, 0.0, 20.0)); }) == ErrorKind::degenerate_correlation);
  CHECK(kind_of([] { rho_tail_prob(point(0.4, -1e3, 0.05, 20.0)); }) == ErrorKind::domain);

  // A vanishing flip fraction leaves no room to cross the threshold.
  double previous = 1.0;
  for (double f : {1e-2, 1e-4, 1e-6}) {
    const double tp = rho_tail_prob(point(0.4, 0.7, f, 20.0));
    CHECK(tp < previous);
    previous = tp;
  }
  CHECK(previous < 1e-3);

  // Long backtests concentrate the tail mean just above the threshold.
  const double far = rho_tail_mean(point(0.4, 0.7, 0.05, 500.0));
  CHECK(far > 0.7);
  CHECK(far < 0.72);

  CHECK(kind_of([] { rho_tail_mean(point(0.4, 0.7, 0.05, 1e5)); }) == ErrorKind::unreliable_tail);
}

TEST_CASE("overfit report at the reference point") {
  const auto r = overfit_report(point(0.4, 0.7, 0.05, 20.0));
  CHECK(r.off == doctest::Approx(2.06773400846137).epsilon(1e-9));
  CHECK(r.off >= 1.7);
  CHECK(r.off <= 2.4);
  REQUIRE(r.poof);
  CHECK(*r.poof == doctest::Approx(0.016011981576).epsilon(1e-9));
  CHECK(r.off_asymptote == doctest::Approx(0.7 / 0.36).epsilon(1e-15));
  CHECK(r.e_out == doctest::Approx(r.p_clear * 0.4 + (1 - r.p_clear) * 0.36).epsilon(1e-15));
}

TEST_CASE("frozen values at the cross-check point") {
  const auto r = overfit_report(point(0.3, 0.7, 0.025, 10.0));
  CHECK(r.p_clear == doctest::Approx(0.102951605366).epsilon(1e-10));
  CHECK(*r.poof == doctest::Approx(0.0200675335522).epsilon(1e-9));
  CHECK(r.poa == doctest::Approx(0.120953154123).epsilon(1e-9));
  CHECK(r.off == doctest::Approx(2.66441719841).epsilon(1e-9));
  CHECK(overfit_report(point(0.4, 0.7, 0.05, 200.0)).off == doctest::Approx(1.96984816842).epsilon(1e-9));
}

TEST_CASE("overfit report limits") {
  const auto r = overfit_report(point(0.4, -50.0, 0.05, 20.0));
  CHECK(r.p_clear == 1.0);
  CHECK(r.poa == 1.0);
  CHECK_FALSE(r.poof.has_value());
  CHECK_FALSE(r.e_srm_given_accept.has_value());
  CHECK(r.e_in == doctest::Approx(r.e_out).epsilon(1e-15));
  CHECK(r.off == doctest::Approx(1.0).epsilon(1e-15));

  for (double t : {200.0, 500.0, 2000.0}) {
    const auto far = overfit_report(point(0.4, 0.7, 0.05, t));
    CHECK(std::abs(far.off - far.off_asymptote) / far.off_asymptote < 0.05);
  }
  CHECK(kind_of([] { overfit_report(point(0.0, 0.7, 0.05, 20.0)); }) == ErrorKind::undefined_off);
}

TEST_CASE("overfit report invariants over random points") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> sr(0.1, 0.9), dtheta(0.05, 0.8), f(0.005, 0.3), t(3.0, 60.0);
  for (int i = 0; i < 40; ++i) {
    const double s = sr(gen);
    const auto p = point(s, s + dtheta(gen), f(gen), t(gen));
    const auto r = overfit_report(p);
    CAPTURE(s);
    CHECK(r.poa == doctest::Approx(r.p_clear + (1 - r.p_clear) * *r.poof).epsilon(1e-14));
    CHECK(r.p_clear >= 0.0);
    CHECK(r.poa <= 1.0);
    CHECK(r.poa >= r.p_clear);
    CHECK(r.e_sr_given_clear >= p.theta);
    CHECK(*r.e_srm_given_accept >= p.theta);
    CHECK(r.off > 1.0);
  }
}

TEST_CASE("advisories") {
  CHECK(advisories(point(0.4, 0.7, 0.05, 20.0)).empty());
  CHECK_FALSE(advisories(point(0.4, 0.7, 0.6, 20.0)).empty());
}

TEST_CASE("minimum backtest length") {
  CHECK(min_backtest_years(0.5, 0.999) == doctest::Approx(43.3102646826509).epsilon(1e-12));
  CHECK(min_backtest_years(0.5, 0.999, Sides::one) == doctest::Approx(38.198142824333).epsilon(1e-12));
  CHECK(min_backtest_years(1.0, 0.999) == doctest::Approx(43.3102646826509 / 4).epsilon(1e-12));
  CHECK(kind_of([] { min_backtest_years(0.0, 0.99); }) == ErrorKind::invalid_parameter);
  CHECK(kind_of([] { min_backtest_years(0.5, 1.0); }) == ErrorKind::invalid_parameter);
  CHECK(kind_of([] { min_backtest_years(0.5, 0.0); }) == ErrorKind::invalid_parameter);
}
