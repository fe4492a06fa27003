#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "offlab/analytic.hpp"
#include "offlab/error.hpp"
#include "offlab/mc.hpp"

using namespace offlab;

namespace {

PathConfig config(double sr, double theta, double f, double t, int n, SimMode mode) {
  PathConfig c;
  c.model.sr_true = sr;
  c.model.theta = theta;
  c.model.f = f;
  c.model.t_years = t;
  c.model.include_sr_correction = false;
  c.n_buckets = n;
  c.mode = mode;
  c.seed = 0x5eed;
  return c;
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

bool within(const Estimate& e, double expected, double z) {
  return std::abs(e.mean - expected) <= z * e.se;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST_CASE("flip count rounds half up") {
  CHECK(flip_count(40, 0.05) == 2);
  CHECK(flip_count(40, 0.025) == 1);
  CHECK(flip_count(10, 0.25) == 3);
  CHECK(flip_count(20, 0.05) == 1);
  CHECK(flip_count(100, 0.05) == 5);
  CHECK(kind_of([] { flip_count(10, 0.04); }) == ErrorKind::flip_count_too_small);
}

TEST_CASE("path configuration validation") {
  auto c = config(0.4, 0.7, 0.05, 20, 40, SimMode::path_level);
  CHECK(c.total_days() == 5040);
  CHECK(c.usable_days() == 5040);
  c.n_buckets = 41;
  CHECK(c.usable_days() == 5002);
  c.daily_vol = 0.0;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::invalid_parameter);
  c = config(0.4, 0.7, 0.05, 1, 40, SimMode::path_level);
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::slice_too_thin);
  c = config(0.4, 0.7, 0.05, 20, 0, SimMode::path_level);
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::invalid_parameter);
}

TEST_CASE("daily PnL is deterministic and scale-free") {
  auto c = config(0.4, 0.7, 0.05, 20, 40, SimMode::path_level);
  const auto a = simulate_daily_pnl(c, 11);
  const auto b = simulate_daily_pnl(c, 11);
  REQUIRE(a.size() == 5040);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  CHECK(simulate_daily_pnl(c, 12) != a);

  auto scaled = c;
  scaled.daily_vol = 0.037;
  const auto s = simulate_daily_pnl(scaled, 11);
  CHECK(realized_sharpe(s, 252) == doctest::Approx(realized_sharpe(a, 252)).epsilon(1e-12));
}

TEST_CASE("realized Sharpe") {
  const std::vector<double> constant(100, 0.01);
  CHECK(kind_of([&] { realized_sharpe(constant, 252); }) == ErrorKind::degenerate_series);
  CHECK(kind_of([] { realized_sharpe(std::vector<double>{1.0}, 252); }) == ErrorKind::degenerate_series);
  std::vector<double> alternating(100);
  for (int i = 0; i < 100; ++i) alternating[i] = i % 2 ? 1.0 : -1.0;
  CHECK(realized_sharpe(alternating, 252) == doctest::Approx(0.0));
  // mean 2, population sd 1.
  CHECK(realized_sharpe(std::vector<double>{1.0, 3.0}, 4) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("realized Sharpe distribution of simulated paths") {
  // Zero drift gives a centred Sharpe.
  auto zero = config(0.0, 0.7, 0.05, 20, 20, SimMode::path_level);
  const auto r0 = run_one_off(zero, 20000);
  CHECK(within(r0.at("mean_sr"), 0.0, 3.0));

  auto c = config(0.4, 0.7, 0.05, 20, 20, SimMode::path_level);
  const auto r = run_one_off(c, 20000);
  CHECK(within(r.at("mean_sr"), 0.4, 3.0));
  // SE of a sample sd is about sd / sqrt(2 n).
  CHECK(std::abs(r.at("sd_sr").mean - std::sqrt(1.0 / 20)) < 3 * std::sqrt(1.0 / 20) / std::sqrt(40000.0));
}

TEST_CASE("P(SR <= 0) at the minimum backtest length") {
  // sr = 0.5 over 43.3 years: a losing backtest should occur about 0.05% of the time.
  auto c = config(0.5, 0.0, 0.05, 43.3, 20, SimMode::path_level);
  c.model.include_sr_correction = true;
  const std::size_t n = 40000;
  const auto r = run_one_off(c, n);
  const double p = 0.000500693471234;
  const double losing = 1.0 - r.at("p_clear").mean;
  CHECK(std::abs(losing - p) < 3 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("slice Sharpes by scheme") {
  auto c = config(0.4, 0.7, 0.3, 20, 10, SimMode::path_level);
  const auto pnl = simulate_daily_pnl(c, 3);
  CounterRng rng(1, 3, Stream::tweaks);

  SliceOptions contiguous;
  const auto s = slice_sharpes(pnl, 10, contiguous, rng);
  REQUIRE(s.slice_sharpes.size() == 10);
  CHECK(s.flip_mask.empty());
  for (int j = 0; j < 10; ++j) {
    const std::span<const double> block(pnl.data() + 504 * j, 504);
    CHECK(s.slice_sharpes[j] == doctest::Approx(realized_sharpe(block, 252)).epsilon(1e-12));
  }

  SliceOptions strided;
  strided.scheme = SliceScheme::strided;
  const auto w = slice_sharpes(pnl, 5, strided, rng);
  for (int j = 0; j < 5; ++j) {
    std::vector<double> days;
    for (std::size_t d = j; d < pnl.size(); d += 5) days.push_back(pnl[d]);
    CHECK(w.slice_sharpes[j] == doctest::Approx(realized_sharpe(days, 252)).epsilon(1e-12));
  }

  SliceOptions pooled;
  pooled.vol = SliceVol::pooled;
  for (auto scheme : {SliceScheme::contiguous, SliceScheme::strided, SliceScheme::random_assignment}) {
    pooled.scheme = scheme;
    const auto p = slice_sharpes(pnl, 10, pooled, rng);
    const double mean = std::accumulate(p.slice_sharpes.begin(), p.slice_sharpes.end(), 0.0) / 10;
    CHECK(mean == doctest::Approx(realized_sharpe(pnl, 252)).epsilon(1e-12));
    CHECK(p.original_sr == doctest::Approx(mean).epsilon(1e-12));
  }

  CHECK(kind_of([&] { slice_sharpes(pnl, 300, contiguous, rng); }) == ErrorKind::slice_too_thin);
}

TEST_CASE("per-slice normalization tracks the realized Sharpe") {
  auto c = config(0.4, 0.7, 0.3, 20, 10, SimMode::path_level);
  SliceOptions opts;
  std::vector<double> gaps;
  for (std::uint64_t path = 0; path < 10000; ++path) {
    const auto pnl = simulate_daily_pnl(c, path);
    CounterRng rng(c.seed, path, Stream::tweaks);
    const auto s = slice_sharpes(pnl, 10, opts, rng);
    gaps.push_back(std::abs(s.original_sr - realized_sharpe(pnl, 252)));
  }
  std::nth_element(gaps.begin(), gaps.begin() + 9900, gaps.end());
  CHECK(gaps[9900] < 0.02);
}

TEST_CASE("random flips") {
  CounterRng rng(3, 0, Stream::tweaks);
  const auto mask = choose_flips_random(10, 0.3, rng);
  CHECK(mask.size() == 3);
  CHECK(std::is_sorted(mask.begin(), mask.end()));
  CHECK(std::adjacent_find(mask.begin(), mask.end()) == mask.end());

  const auto all = choose_flips_random(10, 1.0, rng);
  CHECK(all.size() == 10);
  SliceSet s;
  s.slice_sharpes = {0.1, -0.3, 0.5, 0.2, 0.9, -0.1, 0.4, 0.0, 0.6, 0.3};
  s.original_sr = std::accumulate(s.slice_sharpes.begin(), s.slice_sharpes.end(), 0.0) / 10;
  s.apply_flips(all);
  CHECK(s.modified_sr == doctest::Approx(-s.original_sr).epsilon(1e-14));

  const int draws = 100000;
  std::vector<int> hits(10, 0);
  for (int i = 0; i < draws; ++i)
    for (int k : choose_flips_random(10, 0.3, rng)) ++hits[k];
  const double se = std::sqrt(0.3 * 0.7 / draws);
  for (int h : hits) CHECK(std::abs(double(h) / draws - 0.3) < 3 * se);

  CHECK(kind_of([&] { choose_flips_random(10, 0.04, rng); }) == ErrorKind::flip_count_too_small);
}

TEST_CASE("apply_flips matches a direct recomputation") {
  SliceSet s;
  s.slice_sharpes = {0.3, -1.2, 0.8, 0.05, 0.6, -0.4, 1.1};
  s.original_sr = std::accumulate(s.slice_sharpes.begin(), s.slice_sharpes.end(), 0.0) / 7;
  s.apply_flips({1, 5});
  double direct = 0;
  for (int i = 0; i < 7; ++i) direct += (i == 1 || i == 5 ? -1 : 1) * s.slice_sharpes[i];
  CHECK(s.modified_sr == doctest::Approx(direct / 7).epsilon(1e-14));
}

TEST_CASE("flipping slices matches the Sharpe of the sign-flipped series") {
  auto c = config(0.4, 0.7, 0.2, 20, 10, SimMode::path_level);
  auto pnl = simulate_daily_pnl(c, 5);
  CounterRng rng(0, 0, Stream::tweaks);
  SliceOptions opts;
  auto s = slice_sharpes(pnl, 10, opts, rng);
  s.apply_flips({2, 7});
  for (int slice : {2, 7})
    for (int d = 0; d < 504; ++d) pnl[slice * 504 + d] = -pnl[slice * 504 + d];
  CHECK(std::abs(s.modified_sr - realized_sharpe(pnl, 252)) < 0.02);
}

TEST_CASE("maximal flips") {
  const std::vector<double> a{-1.0, 0.5, 0.7, 0.9, 0.4};
  const auto mo = choose_flips_maximal(a, 0.2);
  CHECK(mo.mask == std::vector<int>{0});
  CHECK(mo.improves);
  SliceSet s;
  s.slice_sharpes = a;
  s.original_sr = 0.3;
  s.apply_flips(mo.mask);
  CHECK(s.modified_sr == doctest::Approx(0.7).epsilon(1e-14));

  const std::vector<double> positive{0.5, 0.2, 0.9, 0.4, 0.6};
  const auto none = choose_flips_maximal(positive, 0.2);
  CHECK(none.mask == std::vector<int>{1});
  CHECK_FALSE(none.improves);

  // The three lowest slices are 0, 7 and 9.
  const std::vector<double> ten{-0.9, 0.4, 0.2, 0.7, 0.1, 0.5, 0.3, -0.2, 0.6, -0.5};
  CHECK(choose_flips_maximal(ten, 0.3).mask == std::vector<int>{0, 7, 9});

  // Ties resolve toward the lower index.
  const std::vector<double> ties{0.1, -0.2, 0.3, -0.2};
  CHECK(choose_flips_maximal(ties, 0.25).mask == std::vector<int>{1});
}

TEST_CASE("gaussian slice sampling") {
  ModelParams p;
  p.sr_true = 0.4;
  p.t_years = 20;
  p.include_sr_correction = false;
  const double sigma = sharpe_noise_scale(p).sigma_tot;
  const int n = 200000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    CounterRng rng(17, i, Stream::returns);
    const auto s = sample_slice_sharpes_gaussian(p, 10, rng);
    REQUIRE(s.slice_sharpes.size() == 10);
    s1 += s.original_sr;
    s2 += s.original_sr * s.original_sr;
  }
  const double mean = s1 / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean - 0.4) < 3 * sigma / std::sqrt(n));
  CHECK(std::abs(var - sigma * sigma) < 3 * sigma * sigma * std::sqrt(2.0 / n));
}

TEST_CASE("tweaked Sharpe law does not depend on N") {
  ModelParams p;
  p.sr_true = 0.4;
  p.f = 0.05;
  p.t_years = 20;
  p.include_sr_correction = false;
  auto draws = [&](int n_buckets) {
    std::vector<double> out;
    for (int i = 0; i < 100000; ++i) {
      CounterRng rng(n_buckets, i, Stream::returns);
      auto s = sample_slice_sharpes_gaussian(p, n_buckets, rng);
      CounterRng tweak(n_buckets, i, Stream::tweaks);
      s.apply_flips(choose_flips_random(n_buckets, p.f, tweak));
      out.push_back(s.modified_sr);
    }
    return out;
  };
  const double d = ks_statistic(draws(20), draws(100));
  CHECK(d < 1.628 * std::sqrt(2.0 / 100000));
}

TEST_CASE("one-off estimates") {
  auto c = config(0.4, 0.7, 0.05, 20, 40, SimMode::gaussian_slice);
  const auto r = run_one_off(c, 200000);
  CHECK(r.policy == "one-off");
  CHECK(r.effective_f == 0.05);
  CHECK(within(r.at("corr_sr_srm"), 0.9, 3.0));
  const auto a = overfit_report(c.model);
  CHECK(within(r.at("p_clear"), a.p_clear, 3.0));
  CHECK(within(r.at("poof"), *a.poof, 3.0));

  auto half = config(0.4, 0.7, 0.5, 20, 20, SimMode::gaussian_slice);
  CHECK(within(run_one_off(half, 200000).at("corr_sr_srm"), 0.0, 3.0));

  auto easy = config(0.4, -50.0, 0.05, 20, 40, SimMode::gaussian_slice);
  const auto e = run_one_off(easy, 10000);
  CHECK(e.at("poa").mean == 1.0);
  CHECK_FALSE(e.has("poof"));
  CHECK(std::find(e.absent.begin(), e.absent.end(), "poof") != e.absent.end());
}

TEST_CASE("results do not depend on the worker count") {
  for (auto mode : {SimMode::gaussian_slice, SimMode::path_level}) {
    auto c = config(0.4, 0.7, 0.05, 10, 20, mode);
    c.workers = 1;
    const auto a = run_one_off(c, 5000);
    const auto ua = run_until_clear(c, 2000);
    c.workers = 5;
    const auto b = run_one_off(c, 5000);
    const auto ub = run_until_clear(c, 2000);
    for (const auto& [name, est] : a.estimates) {
      CHECK(std::memcmp(&est.mean, &b.at(name).mean, sizeof(double)) == 0);
      CHECK(std::memcmp(&est.se, &b.at(name).se, sizeof(double)) == 0);
    }
    for (const auto& [name, est] : ua.estimates)
      CHECK(std::memcmp(&est.mean, &ub.at(name).mean, sizeof(double)) == 0);
    CHECK(ua.attempts_histogram == ub.attempts_histogram);
  }
}

TEST_CASE("path-level estimates are invariant to the daily volatility") {
  auto c = config(0.4, 0.7, 0.05, 10, 20, SimMode::path_level);
  const auto a = run_one_off(c, 3000);
  c.daily_vol = 0.031;
  const auto b = run_one_off(c, 3000);
  for (const auto& [name, est] : a.estimates)
    CHECK(est.mean == doctest::Approx(b.at(name).mean).epsilon(1e-9));
}

TEST_CASE("until-clear") {
  auto c = config(0.4, 0.7, 0.05, 20, 40, SimMode::gaussian_slice);
  const auto r = run_until_clear(c, 20000);
  const double p = r.at("p_clear").mean;
  CHECK(r.at("e_out").mean == doctest::Approx(p * 0.4 + (1 - p) * 0.36).epsilon(1e-14));
  CHECK(within(r.at("off"), overfit_report(c.model).off, 3.0));
  CHECK(r.at("mean_attempts").mean >= 1.0);
  std::uint64_t total = 0;
  for (const auto& [k, v] : r.attempts_histogram) total += v;
  CHECK(total == r.conditioned_paths - r.exhausted_paths);

  auto easy = config(0.4, -50.0, 0.05, 20, 40, SimMode::gaussian_slice);
  const auto e = run_until_clear(easy, 20000);
  CHECK(within(e.at("off"), 1.0, 3.0));

  // Reusing the same realization leaves many paths unable to clear.
  CHECK(kind_of([&] { run_until_clear(c, 2000, 200, RebinModel::same_path); }) ==
        ErrorKind::attempts_exhausted);
}

TEST_CASE("maximal overfitting beats a random tweak and grows with N") {
  auto c = config(0.4, 0.7, 0.05, 20, 20, SimMode::gaussian_slice);
  const auto mo20 = run_maximal(c, 20000);
  CHECK(mo20.policy == "maximal");
  CHECK(mo20.at("p_mo_clears").mean > *overfit_report(c.model).poof);
  c.n_buckets = 100;
  const auto mo100 = run_maximal(c, 20000);
  CHECK(mo100.at("e_in").mean > mo20.at("e_in").mean);
  CHECK(mo100.at("p_mo_clears").mean > mo20.at("p_mo_clears").mean);
}
