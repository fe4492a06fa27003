#include "offlab/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "offlab/error.hpp"
#include "offlab/kernels.hpp"

namespace offlab {
namespace {

// Fixed chunking makes the reduction order independent of the worker count.
constexpr std::size_t kChunk = 1024;

// Running sums for one chunk of paths. Sharpe sums are centered on known
// constants to keep cancellation out of the variance terms.
struct Accumulator {
  std::uint64_t n = 0;
  std::uint64_t n_clear = 0;
  std::uint64_t n_cond = 0;
  std::uint64_t n_hit = 0;
  // original SR (a) and tweaked SR (b), centered
  double sa = 0, saa = 0, sb = 0, sbb = 0, sab = 0;
  // in-sample (x) and out-of-sample (y) Sharpe of the presented strategy
  std::uint64_t n_valid = 0;
  std::uint64_t n_tweaked = 0;
  std::uint64_t n_exhausted = 0;
  double sx = 0, sxx = 0, sy = 0, syy = 0, sxy = 0;
  double s_att = 0, s_att2 = 0;
  std::map<std::uint64_t, std::uint64_t> attempts;

  void merge(const Accumulator& o) {
    n += o.n;
    n_clear += o.n_clear;
    n_cond += o.n_cond;
    n_hit += o.n_hit;
    sa += o.sa;
    saa += o.saa;
    sb += o.sb;
    sbb += o.sbb;
    sab += o.sab;
    n_valid += o.n_valid;
    n_tweaked += o.n_tweaked;
    n_exhausted += o.n_exhausted;
    sx += o.sx;
    sxx += o.sxx;
    sy += o.sy;
    syy += o.syy;
    sxy += o.sxy;
    s_att += o.s_att;
    s_att2 += o.s_att2;
    for (const auto& [k, v] : o.attempts) attempts[k] += v;
  }

  void add_presented(double in_sample, double out_sample) {
    ++n_valid;
    sx += in_sample;
    sxx += in_sample * in_sample;
    sy += out_sample;
    syy += out_sample * out_sample;
    sxy += in_sample * out_sample;
  }

  void add_attempts(std::uint64_t a) {
    ++n_tweaked;
    s_att += static_cast<double>(a);
    s_att2 += static_cast<double>(a) * static_cast<double>(a);
    ++attempts[a];
  }
};

template <class PathFn>
Accumulator run_ensemble(std::size_t n_paths, unsigned workers, PathFn&& per_path) {
  const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
  std::vector<Accumulator> chunks(n_chunks);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t c = next++; c < n_chunks; c = next++) {
      const std::size_t end = std::min(n_paths, (c + 1) * kChunk);
      for (std::size_t p = c * kChunk; p < end; ++p) per_path(p, chunks[c]);
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n_chunks, 1)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  Accumulator total;
  for (const auto& c : chunks) total.merge(c);
  return total;
}

Estimate proportion(std::uint64_t hits, std::uint64_t n) {
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

double sd_from(double s, double ss, double n) {
  const double m = s / n;
  return std::sqrt(std::max(0.0, ss / n - m * m));
}

// Per-thread work buffers for path-level simulation.
struct Scratch {
  std::vector<double> returns;
  std::vector<double> shuffled;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

void fill_returns(const PathConfig& config, CounterRng& rng, std::vector<double>& out) {
  out.resize(config.total_days());
  rng.fill_normal(out);
  const double mu = config.model.sr_daily() * config.daily_vol;
  kernels::active().affine(out, mu, config.daily_vol, out);
}

// The realization a path starts from, sliced contiguously.
SliceSet draw_original(const PathConfig& config, CounterRng& rng) {
  if (config.mode == SimMode::gaussian_slice) {
    return sample_slice_sharpes_gaussian(config.model, config.n_buckets, rng);
  }
  auto& buf = scratch().returns;
  fill_returns(config, rng, buf);
  SliceOptions opts{SliceScheme::contiguous, config.slice_vol, config.model.days_per_year,
                    config.min_days_per_slice};
  return slice_sharpes(buf, config.n_buckets, opts, rng);
}

void check_exhaustion(const Accumulator& acc, std::size_t n_paths, std::uint64_t max_attempts) {
  if (static_cast<double>(acc.n_exhausted) > 0.001 * static_cast<double>(n_paths)) {
    std::ostringstream msg;
    msg << acc.n_exhausted << " of " << n_paths << " paths (more than 0.1%) did not clear "
        << "theta within " << max_attempts << " attempts";
    fail(ErrorKind::attempts_exhausted, msg.str());
  }
}

// e_in, e_out, off from the presented-strategy sums. e_out is imposed by the
// model, so it is assembled from the clear fraction rather than measured.
void fill_presented(McResult& res, const Accumulator& acc, double sr_true, double r_eff) {
  if (acc.n_valid == 0) {
    res.absent.insert(res.absent.end(), {"e_in", "e_out", "off"});
    return;
  }
  const double n = static_cast<double>(acc.n_valid);
  const double p_clear = static_cast<double>(acc.n_clear) / n;
  const double e_in = acc.sx / n;
  const double e_out = p_clear * sr_true + (1.0 - p_clear) * r_eff * sr_true;
  const double var_x = acc.sxx / n - e_in * e_in;
  const double my = acc.sy / n;
  const double var_y = std::max(0.0, acc.syy / n - my * my);
  const double cov = acc.sxy / n - e_in * my;
  res.estimates["e_in"] = {e_in, std::sqrt(std::max(0.0, var_x) / n)};
  res.estimates["e_out"] = {e_out, std::sqrt(var_y / n)};
  if (e_out != 0.0) {
    const double off = e_in / e_out;
    const double var_lin = std::max(0.0, var_x - 2.0 * off * cov + off * off * var_y);
    res.estimates["off"] = {off, std::sqrt(var_lin / n) / std::abs(e_out)};
  } else {
    res.absent.emplace_back("off");
  }
}

}  // namespace

void PathConfig::validate() const {
  model.validate();
  if (n_buckets < 1) fail(ErrorKind::invalid_parameter, "n_buckets must satisfy n_buckets >= 1");
  if (!(daily_vol > 0.0) || !std::isfinite(daily_vol)) {
    fail(ErrorKind::invalid_parameter, "daily_vol must satisfy daily_vol > 0");
  }
  if (min_days_per_slice < 2) {
    fail(ErrorKind::invalid_parameter, "min_days_per_slice must be >= 2");
  }
  if (mode == SimMode::path_level) {
    const std::size_t per_slice = usable_days() / static_cast<std::size_t>(n_buckets);
    if (per_slice < static_cast<std::size_t>(min_days_per_slice)) {
      std::ostringstream msg;
      msg << "each slice must hold at least " << min_days_per_slice << " days (t_years * "
          << "days_per_year / n_buckets = " << per_slice << ")";
      fail(ErrorKind::slice_too_thin, msg.str());
    }
  }
}

std::size_t PathConfig::total_days() const {
  return static_cast<std::size_t>(std::llround(model.t_years * model.days_per_year));
}

std::size_t PathConfig::usable_days() const {
  const auto n = static_cast<std::size_t>(std::max(n_buckets, 1));
  return total_days() / n * n;
}

int flip_count(int n_buckets, double f) {
  const auto k = static_cast<int>(std::floor(f * n_buckets + 0.5));
  if (k < 1) {
    std::ostringstream msg;
    msg << "round(f*N) must be >= 1 (f=" << f << ", N=" << n_buckets << ")";
    fail(ErrorKind::flip_count_too_small, msg.str());
  }
  return std::min(k, n_buckets);
}

void SliceSet::apply_flips(std::vector<int> mask) {
  std::sort(mask.begin(), mask.end());
  double flipped = 0.0;
  for (int i : mask) flipped += slice_sharpes[static_cast<std::size_t>(i)];
  modified_sr = original_sr - 2.0 * flipped / static_cast<double>(slice_sharpes.size());
  flip_mask = std::move(mask);
}

std::vector<double> simulate_daily_pnl(const PathConfig& config, std::uint64_t path_index) {
  config.validate();
  CounterRng rng(config.seed, path_index, Stream::returns);
  std::vector<double> out;
  fill_returns(config, rng, out);
  return out;
}

double realized_sharpe(std::span<const double> returns, int days_per_year) {
  if (returns.size() < 2) {
    fail(ErrorKind::degenerate_series, "a Sharpe ratio needs at least two returns");
  }
  const auto [lo, hi] = std::minmax_element(returns.begin(), returns.end());
  const double n = static_cast<double>(returns.size());
  const double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : returns) ss += (x - mean) * (x - mean);
  if (*lo == *hi || !(ss > 0.0)) {
    fail(ErrorKind::degenerate_series, "return series has zero variance");
  }
  return mean / std::sqrt(ss / n) * std::sqrt(static_cast<double>(days_per_year));
}

SliceSet slice_sharpes(std::span<const double> returns, int n_buckets, const SliceOptions& options,
                       CounterRng& rng) {
  if (n_buckets < 1) fail(ErrorKind::invalid_parameter, "n_buckets must satisfy n_buckets >= 1");
  const auto n = static_cast<std::size_t>(n_buckets);
  const std::size_t per = returns.size() / n;
  if (per < static_cast<std::size_t>(std::max(options.min_days_per_slice, 2))) {
    std::ostringstream msg;
    msg << "each slice must hold at least " << options.min_days_per_slice << " days (got "
        << per << ")";
    fail(ErrorKind::slice_too_thin, msg.str());
  }
  const std::size_t usable = per * n;
  const auto data = returns.first(usable);
  const auto& k = kernels::active();

  std::vector<double> sums(n), sumsq(n);
  switch (options.scheme) {
    case SliceScheme::contiguous:
      k.block_moments(data, per, sums, sumsq);
      break;
    case SliceScheme::strided:
      k.strided_moments(data, sums, sumsq);
      break;
    case SliceScheme::random_assignment: {
      auto& buf = scratch().shuffled;
      buf.assign(data.begin(), data.end());
      for (std::size_t i = usable - 1; i > 0; --i) {
        std::swap(buf[i], buf[rng.below(static_cast<std::uint32_t>(i + 1))]);
      }
      k.block_moments(buf, per, sums, sumsq);
      break;
    }
  }

  const double m = static_cast<double>(per);
  const double annualize = std::sqrt(static_cast<double>(options.days_per_year));
  SliceSet out;
  out.slice_sharpes.resize(n);
  if (options.vol == SliceVol::pooled) {
    const double total = std::accumulate(sums.begin(), sums.end(), 0.0);
    const double total_sq = std::accumulate(sumsq.begin(), sumsq.end(), 0.0);
    const double mean = total / static_cast<double>(usable);
    const double var = total_sq / static_cast<double>(usable) - mean * mean;
    if (!(var > 0.0)) fail(ErrorKind::degenerate_series, "return series has zero variance");
    const double scale = annualize / std::sqrt(var);
    for (std::size_t i = 0; i < n; ++i) out.slice_sharpes[i] = sums[i] / m * scale;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double mean = sums[i] / m;
      const double var = sumsq[i] / m - mean * mean;
      if (!(var > 0.0)) fail(ErrorKind::degenerate_series, "slice has zero variance");
      out.slice_sharpes[i] = mean / std::sqrt(var) * annualize;
    }
  }
  out.original_sr =
      std::accumulate(out.slice_sharpes.begin(), out.slice_sharpes.end(), 0.0) / static_cast<double>(n);
  out.modified_sr = out.original_sr;
  return out;
}

std::vector<int> choose_flips_random(int n_buckets, double f, CounterRng& rng) {
  const int k = flip_count(n_buckets, f);
  std::vector<int> idx(static_cast<std::size_t>(n_buckets));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint32_t>(n_buckets - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

MaximalFlips choose_flips_maximal(std::span<const double> slice_sharpes, double f) {
  const int n = static_cast<int>(slice_sharpes.size());
  const int k = flip_count(n, f);
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return slice_sharpes[static_cast<std::size_t>(a)] < slice_sharpes[static_cast<std::size_t>(b)];
  });
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  double flipped = 0.0;
  for (int i : idx) flipped += slice_sharpes[static_cast<std::size_t>(i)];
  // SR_m - SR = -(2/N) * sum of flipped slices.
  return {std::move(idx), flipped < 0.0};
}

SliceSet sample_slice_sharpes_gaussian(const ModelParams& params, int n_buckets, CounterRng& rng) {
  if (n_buckets < 1) fail(ErrorKind::invalid_parameter, "n_buckets must satisfy n_buckets >= 1");
  const double sd = sharpe_noise_scale(params).sigma_slice(n_buckets);
  SliceSet out;
  out.slice_sharpes.resize(static_cast<std::size_t>(n_buckets));
  rng.fill_normal(out.slice_sharpes);
  kernels::active().affine(out.slice_sharpes, params.sr_true, sd, out.slice_sharpes);
  out.original_sr = std::accumulate(out.slice_sharpes.begin(), out.slice_sharpes.end(), 0.0) /
                    static_cast<double>(n_buckets);
  out.modified_sr = out.original_sr;
  return out;
}

McResult run_one_off(const PathConfig& config, std::size_t n_paths) {
  config.validate();
  if (n_paths < 1) fail(ErrorKind::invalid_parameter, "n_paths must be >= 1");
  const ModelParams& m = config.model;
  const int k = flip_count(config.n_buckets, m.f);
  const double r_eff = 1.0 - 2.0 * k / static_cast<double>(config.n_buckets);

  Accumulator acc = run_ensemble(n_paths, config.workers, [&](std::size_t p, Accumulator& a) {
    CounterRng base(config.seed, p, Stream::returns);
    CounterRng tweaks(config.seed, p, Stream::tweaks);
    SliceSet s = draw_original(config, base);
    s.apply_flips(choose_flips_random(config.n_buckets, m.f, tweaks));
    const double da = s.original_sr - m.sr_true;
    const double db = s.modified_sr - r_eff * m.sr_true;
    ++a.n;
    a.sa += da;
    a.saa += da * da;
    a.sb += db;
    a.sbb += db * db;
    a.sab += da * db;
    if (s.original_sr > m.theta) {
      ++a.n_clear;
    } else {
      ++a.n_cond;
      if (s.modified_sr > m.theta) ++a.n_hit;
    }
  });

  McResult res;
  res.n_paths = n_paths;
  res.seed = config.seed;
  res.policy = "one-off";
  res.effective_f = k / static_cast<double>(config.n_buckets);
  res.conditioned_paths = acc.n_cond;
  const double n = static_cast<double>(acc.n);
  res.estimates["p_clear"] = proportion(acc.n_clear, acc.n);
  res.estimates["poa"] = proportion(acc.n_clear + acc.n_hit, acc.n);
  if (acc.n_cond > 0) {
    res.estimates["poof"] = proportion(acc.n_hit, acc.n_cond);
  } else {
    res.absent.emplace_back("poof");
  }
  const double sd_a = sd_from(acc.sa, acc.saa, n);
  const double sd_b = sd_from(acc.sb, acc.sbb, n);
  res.estimates["mean_sr"] = {m.sr_true + acc.sa / n, sd_a / std::sqrt(n)};
  res.estimates["sd_sr"] = {sd_a, acc.n > 1 ? sd_a / std::sqrt(2.0 * (n - 1.0)) : 0.0};
  if (acc.n >= 3 && sd_a > 0.0 && sd_b > 0.0) {
    const double cov = acc.sab / n - (acc.sa / n) * (acc.sb / n);
    const double corr = std::clamp(cov / (sd_a * sd_b), -1.0, 1.0);
    res.estimates["corr_sr_srm"] = {corr, (1.0 - corr * corr) / std::sqrt(n - 1.0)};
  } else {
    res.absent.emplace_back("corr_sr_srm");
  }
  return res;
}

McResult run_until_clear(const PathConfig& config, std::size_t n_paths, std::uint64_t max_attempts,
                         RebinModel rebin) {
  config.validate();
  if (n_paths < 1) fail(ErrorKind::invalid_parameter, "n_paths must be >= 1");
  if (max_attempts < 1) fail(ErrorKind::invalid_parameter, "max_attempts must be >= 1");
  const ModelParams& m = config.model;
  const int n_b = config.n_buckets;
  const int k = flip_count(n_b, m.f);
  const double r_eff = 1.0 - 2.0 * k / static_cast<double>(n_b);

  Accumulator acc = run_ensemble(n_paths, config.workers, [&](std::size_t p, Accumulator& a) {
    CounterRng base(config.seed, p, Stream::returns);
    CounterRng tweaks(config.seed, p, Stream::tweaks);
    CounterRng fresh(config.seed, p, Stream::rebin);
    ++a.n;
    SliceSet original = draw_original(config, base);
    if (original.original_sr > m.theta) {
      ++a.n_clear;
      a.add_presented(original.original_sr, m.sr_true);
      return;
    }
    ++a.n_cond;
    // Path-level same_path rebinning reshuffles the original returns.
    std::vector<double> kept;
    if (rebin == RebinModel::same_path && config.mode == SimMode::path_level) {
      kept = scratch().returns;
    }
    std::uint64_t draws = 0;  // fresh realizations consumed, rejected ones included
    for (std::uint64_t attempt = 1; attempt <= max_attempts; ++attempt) {
      SliceSet s;
      if (attempt == 1) {
        s = original;
      } else if (rebin == RebinModel::fresh) {
        bool found = false;
        while (draws < max_attempts) {
          ++draws;
          s = draw_original(config, fresh);
          if (!(s.original_sr > m.theta)) {
            found = true;
            break;
          }
        }
        if (!found) break;
      } else if (config.mode == SimMode::gaussian_slice) {
        // Slice Sharpes given their mean: iid draws recentred on it.
        s = sample_slice_sharpes_gaussian(m, n_b, fresh);
        const double shift = original.original_sr - s.original_sr;
        for (double& v : s.slice_sharpes) v += shift;
        s.original_sr = original.original_sr;
      } else {
        SliceOptions opts{SliceScheme::random_assignment, config.slice_vol, m.days_per_year,
                          config.min_days_per_slice};
        s = slice_sharpes(kept, n_b, opts, tweaks);
      }
      s.apply_flips(choose_flips_random(n_b, m.f, tweaks));
      if (s.modified_sr > m.theta) {
        a.add_presented(s.modified_sr, r_eff * m.sr_true);
        a.add_attempts(attempt);
        return;
      }
    }
    ++a.n_exhausted;
  });

  check_exhaustion(acc, n_paths, max_attempts);
  McResult res;
  res.n_paths = n_paths;
  res.seed = config.seed;
  res.policy = rebin == RebinModel::fresh ? "until-clear/fresh" : "until-clear/same-path";
  res.effective_f = k / static_cast<double>(n_b);
  res.conditioned_paths = acc.n_cond;
  res.exhausted_paths = acc.n_exhausted;
  res.attempts_histogram = acc.attempts;
  res.estimates["p_clear"] = proportion(acc.n_clear, acc.n);
  fill_presented(res, acc, m.sr_true, r_eff);
  if (acc.n_tweaked > 0) {
    const double nt = static_cast<double>(acc.n_tweaked);
    res.estimates["mean_attempts"] = {acc.s_att / nt, sd_from(acc.s_att, acc.s_att2, nt) / std::sqrt(nt)};
  } else {
    res.absent.emplace_back("mean_attempts");
  }
  return res;
}

McResult run_maximal(const PathConfig& config, std::size_t n_paths) {
  config.validate();
  if (n_paths < 1) fail(ErrorKind::invalid_parameter, "n_paths must be >= 1");
  const ModelParams& m = config.model;
  const int k = flip_count(config.n_buckets, m.f);
  const double r_eff = 1.0 - 2.0 * k / static_cast<double>(config.n_buckets);

  Accumulator acc = run_ensemble(n_paths, config.workers, [&](std::size_t p, Accumulator& a) {
    CounterRng base(config.seed, p, Stream::returns);
    SliceSet s = draw_original(config, base);
    ++a.n;
    if (s.original_sr > m.theta) {
      ++a.n_clear;
      a.add_presented(s.original_sr, m.sr_true);
      return;
    }
    ++a.n_cond;
    MaximalFlips mo = choose_flips_maximal(s.slice_sharpes, m.f);
    s.apply_flips(std::move(mo.mask));
    if (s.modified_sr > m.theta) ++a.n_hit;
    if (mo.improves) {
      a.add_presented(s.modified_sr, r_eff * m.sr_true);
    } else {
      a.add_presented(s.original_sr, m.sr_true);
    }
  });

  McResult res;
  res.n_paths = n_paths;
  res.seed = config.seed;
  res.policy = "maximal";
  res.effective_f = k / static_cast<double>(config.n_buckets);
  res.conditioned_paths = acc.n_cond;
  res.estimates["p_clear"] = proportion(acc.n_clear, acc.n);
  if (acc.n_cond > 0) {
    res.estimates["p_mo_clears"] = proportion(acc.n_hit, acc.n_cond);
  } else {
    res.absent.emplace_back("p_mo_clears");
  }
  // e_out for MO: paths whose MO trajectory does not improve keep sr_true, so
  // it is measured from the per-path values instead of the clear fraction.
  const double n = static_cast<double>(acc.n_valid);
  const double e_in = acc.sx / n;
  const double e_out = acc.sy / n;
  const double var_x = std::max(0.0, acc.sxx / n - e_in * e_in);
  const double var_y = std::max(0.0, acc.syy / n - e_out * e_out);
  const double cov = acc.sxy / n - e_in * e_out;
  res.estimates["e_in"] = {e_in, std::sqrt(var_x / n)};
  res.estimates["e_out"] = {e_out, std::sqrt(var_y / n)};
  if (e_out != 0.0) {
    const double off = e_in / e_out;
    res.estimates["off"] = {off, std::sqrt(std::max(0.0, var_x - 2 * off * cov + off * off * var_y) / n) /
                                     std::abs(e_out)};
  } else {
    res.absent.emplace_back("off");
  }
  return res;
}

}  // namespace offlab
