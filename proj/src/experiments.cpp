#include "offlab/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <sstream>
#include <thread>

#include "offlab/error.hpp"

namespace offlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void set_axis(ModelParams& p, Axis axis, double v) {
  switch (axis) {
    case Axis::sr_true: p.sr_true = v; break;
    case Axis::theta: p.theta = v; break;
    case Axis::f: p.f = v; break;
    case Axis::t_years: p.t_years = v; break;
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void evaluate_point(const GridSpec& spec, GridRow& row) {
  row.metrics.assign(spec.metrics.size(), kNaN);
  try {
    const OverfitReport rep = overfit_report(row.params);
    for (std::size_t i = 0; i < spec.metrics.size(); ++i) {
      row.metrics[i] = report_metric(rep, spec.metrics[i]);
    }
  } catch (const Error& e) {
    row.status = std::string(to_string(e.kind())) + ": " + e.what();
  }
  if (spec.mc_overlay) {
    PathConfig cfg = spec.mc_overlay->config;
    cfg.model = row.params;
    try {
      row.mc = run_one_off(cfg, spec.mc_overlay->n_paths);
    } catch (const Error& e) {
      const std::string msg = std::string("mc ") + std::string(to_string(e.kind())) + ": " + e.what();
      row.status = row.status == "ok" ? msg : row.status + "; " + msg;
    }
  }
}

AxisSpec axis(Axis name, double start, double stop, int count) { return {name, start, stop, count}; }

}  // namespace

std::string_view to_string(Axis axis) noexcept {
  switch (axis) {
    case Axis::sr_true: return "sr_true";
    case Axis::theta: return "theta";
    case Axis::f: return "f";
    case Axis::t_years: return "t_years";
  }
  return "?";
}

std::optional<Axis> parse_axis(std::string_view name) noexcept {
  for (Axis a : {Axis::sr_true, Axis::theta, Axis::f, Axis::t_years}) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

std::vector<double> AxisSpec::values() const {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    // Pin the end points so stop is hit exactly.
    out[static_cast<std::size_t>(i)] =
        i == count - 1 ? stop : start + (stop - start) * i / static_cast<double>(count - 1);
  }
  return out;
}

const std::vector<std::string>& report_metric_names() {
  static const std::vector<std::string> names{
      "p_clear", "e_sr_given_clear", "poof", "e_srm_given_accept", "e_in",
      "e_out",   "off",              "poa",  "off_asymptote"};
  return names;
}

double report_metric(const OverfitReport& r, std::string_view name) {
  if (name == "p_clear") return r.p_clear;
  if (name == "e_sr_given_clear") return r.e_sr_given_clear;
  if (name == "poof") return r.poof.value_or(kNaN);
  if (name == "e_srm_given_accept") return r.e_srm_given_accept.value_or(kNaN);
  if (name == "e_in") return r.e_in;
  if (name == "e_out") return r.e_out;
  if (name == "off") return r.off;
  if (name == "poa") return r.poa;
  if (name == "off_asymptote") return r.off_asymptote;
  fail(ErrorKind::invalid_parameter, "unknown metric '" + std::string(name) + "'");
}

void GridSpec::validate() const {
  fixed.validate();
  if (axes.empty() || axes.size() > 2) {
    fail(ErrorKind::invalid_parameter, "a grid needs one or two axes");
  }
  for (const auto& a : axes) {
    const std::string name(to_string(a.name));
    if (a.count < 2) fail(ErrorKind::invalid_parameter, "axis " + name + ": count must be >= 2");
    if (!std::isfinite(a.start) || !std::isfinite(a.stop)) {
      fail(ErrorKind::invalid_parameter, "axis " + name + ": bounds must be finite");
    }
    const double lo = std::min(a.start, a.stop);
    const double hi = std::max(a.start, a.stop);
    if (a.name == Axis::f && !(lo > 0.0 && hi < 0.5)) {
      fail(ErrorKind::invalid_parameter, "axis f: range must lie in (0, 0.5)");
    }
    if (a.name == Axis::t_years && !(lo > 0.0)) {
      fail(ErrorKind::invalid_parameter, "axis t_years: range must be > 0");
    }
  }
  if (axes.size() == 2 && axes[0].name == axes[1].name) {
    fail(ErrorKind::invalid_parameter, "grid axes must differ");
  }
  if (metrics.empty()) fail(ErrorKind::invalid_parameter, "a grid needs at least one metric");
  for (const auto& m : metrics) (void)report_metric(OverfitReport{}, m);
  if (mc_overlay) {
    mc_overlay->config.validate();
    if (mc_overlay->n_paths < 1) fail(ErrorKind::invalid_parameter, "mc overlay needs n_paths >= 1");
  }
}

GridResult grid_evaluate(const GridSpec& spec) {
  spec.validate();
  GridResult out;
  out.metric_names = spec.metrics;
  out.metadata.timestamp = utc_timestamp();
  out.metadata.seed = spec.mc_overlay ? spec.mc_overlay->config.seed : 0;
  for (const auto& a : spec.axes) out.axis_names.emplace_back(to_string(a.name));

  std::vector<std::vector<double>> values;
  for (const auto& a : spec.axes) values.push_back(a.values());
  const std::size_t inner = values.size() == 2 ? values[1].size() : 1;
  const std::size_t total = values[0].size() * inner;
  out.rows.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    GridRow& row = out.rows[i];
    row.params = spec.fixed;
    row.axis_values.push_back(values[0][i / inner]);
    set_axis(row.params, spec.axes[0].name, row.axis_values.back());
    if (values.size() == 2) {
      row.axis_values.push_back(values[1][i % inner]);
      set_axis(row.params, spec.axes[1].name, row.axis_values.back());
    }
  }

  // MC overlays parallelize internally; analytic points are spread over workers.
  unsigned workers = spec.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : spec.workers;
  if (spec.mc_overlay) workers = 1;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < total; i = next++) evaluate_point(spec, out.rows[i]);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(workers, total); ++w) pool.emplace_back(work);
  }
  return out;
}

GridSpec preset(std::string_view name) {
  GridSpec spec;
  spec.fixed.include_sr_correction = false;
  if (name == "fig2" || name == "fig3") {
    spec.fixed.theta = 0.7;
    spec.fixed.f = 0.025;
    spec.axes = {axis(Axis::sr_true, 0.3, 0.6, 4), axis(Axis::t_years, 2.0, 100.0, 21)};
    spec.metrics = name == "fig2" ? std::vector<std::string>{"off", "off_asymptote"}
                                  : std::vector<std::string>{"poof"};
  } else if (name == "fig4") {
    spec.fixed.theta = 0.7;
    spec.fixed.t_years = 20.0;
    spec.axes = {axis(Axis::sr_true, 0.3, 0.6, 4), axis(Axis::f, 0.01, 0.10, 19)};
    spec.metrics = {"off"};
  } else if (name == "fig5") {
    spec.fixed.sr_true = 0.5;
    spec.fixed.t_years = 20.0;
    spec.axes = {axis(Axis::theta, 0.5, 0.8, 4), axis(Axis::f, 0.01, 0.10, 19)};
    spec.metrics = {"off"};
  } else {
    fail(ErrorKind::invalid_parameter, "unknown preset '" + std::string(name) +
                                           "' (expected fig2, fig3, fig4 or fig5)");
  }
  return spec;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig2", "fig3", "fig4", "fig5"};
  return names;
}

ComparisonReport mc_vs_analytic(const PathConfig& config, std::size_t n_paths,
                                const ComparisonOptions& options) {
  config.validate();
  const int k = flip_count(config.n_buckets, config.model.f);
  ModelParams effective = config.model;
  effective.f = k / static_cast<double>(config.n_buckets);

  ComparisonReport rep;
  rep.effective_f = effective.f;
  auto add = [&](const std::string& metric, double analytic, const Estimate& est) {
    ComparisonRow row{metric, analytic, est.mean, est.se, 0.0};
    const double diff = est.mean - analytic;
    row.z = est.se > 0.0 ? diff / est.se : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    rep.rows.push_back(row);
  };

  const McResult one = run_one_off(config, n_paths);
  add("p_clear", prob_clear(effective), one.at("p_clear"));
  add("corr_sr_srm", effective.flip_correlation(), one.at("corr_sr_srm"));
  const bool tweakable = effective.f > 0.0 && effective.f < 1.0;
  if (tweakable && one.has("poof")) {
    add("poof", rho_tail_prob(effective), one.at("poof"));
    const double pc = prob_clear(effective);
    add("poa", pc + (1.0 - pc) * rho_tail_prob(effective), one.at("poa"));
  }
  if (options.until_clear_paths > 0 && tweakable) {
    PathConfig uc = config;
    const McResult until = run_until_clear(uc, options.until_clear_paths, options.max_attempts);
    const OverfitReport analytic = overfit_report(effective);
    add("e_in", analytic.e_in, until.at("e_in"));
    add("off", analytic.off, until.at("off"));
  }
  rep.pass = true;
  for (const auto& r : rep.rows) rep.pass = rep.pass && std::abs(r.z) < kComparisonZ;
  return rep;
}

}  // namespace offlab
