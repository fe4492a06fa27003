// offlab: command-line front end for the overfitting-factor model.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "offlab/analytic.hpp"
#include "offlab/error.hpp"
#include "offlab/experiments.hpp"
#include "offlab/mc.hpp"
#include "offlab/output.hpp"

namespace {

using namespace offlab;
using output::Cell;
using output::KeyValues;
using output::Table;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitParameter = 2;
constexpr int kExitNumeric = 3;

struct Options {
  ModelParams model;
  int n_buckets = 40;
  double daily_vol = 0.01;
  std::uint64_t seed = 1;
  std::string mode = "gaussian";
  std::string slice_vol = "pooled";
  int min_days_per_slice = 20;
  unsigned workers = 0;
  std::string format = "json";
  std::string output_path;
  int verbosity = 0;

  // density
  std::vector<double> ys;
  double y_from = 0.0, y_to = 0.0;
  int y_count = 0;
  // min-years
  double sr = 0.5;
  double confidence = 0.999;
  std::string sides = "two";
  // simulate
  std::string policy = "one-off";
  std::size_t n_paths = 100000;
  std::uint64_t max_attempts = 10000;
  std::string rebin = "fresh";
  // grid
  std::string preset;
  std::vector<std::string> axes;
  std::vector<std::string> metrics;
  std::size_t mc_paths = 0;
  // verify
  std::size_t until_clear_paths = 100000;
};

void emit_error(const std::string& kind, const std::string& message) {
  nlohmann::ordered_json err;
  err["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << err.dump() << '\n';
}

PathConfig path_config(const Options& o) {
  PathConfig cfg;
  cfg.model = o.model;
  cfg.n_buckets = o.n_buckets;
  cfg.daily_vol = o.daily_vol;
  cfg.seed = o.seed;
  cfg.mode = o.mode == "path" ? SimMode::path_level : SimMode::gaussian_slice;
  cfg.slice_vol = o.slice_vol == "per-slice" ? SliceVol::per_slice : SliceVol::pooled;
  cfg.min_days_per_slice = o.min_days_per_slice;
  cfg.workers = o.workers;
  return cfg;
}

KeyValues path_params(const Options& o) {
  KeyValues kv = output::model_params(o.model);
  kv.emplace_back("n_buckets", static_cast<std::int64_t>(o.n_buckets));
  kv.emplace_back("daily_vol", o.daily_vol);
  kv.emplace_back("mode", o.mode);
  kv.emplace_back("slice_vol", o.slice_vol);
  kv.emplace_back("min_days_per_slice", static_cast<std::int64_t>(o.min_days_per_slice));
  return kv;
}

AxisSpec parse_axis_flag(const std::string& text) {
  // name:start:stop:count
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  auto bad = [&] {
    fail(ErrorKind::invalid_parameter,
         "--axis must look like name:start:stop:count (got '" + text + "')");
  };
  if (parts.size() != 4) bad();
  auto name = parse_axis(parts[0]);
  if (!name) fail(ErrorKind::invalid_parameter, "--axis name must be sr_true, theta, f or t_years");
  AxisSpec a;
  a.name = *name;
  try {
    a.start = std::stod(parts[1]);
    a.stop = std::stod(parts[2]);
    a.count = std::stoi(parts[3]);
  } catch (const std::exception&) {
    bad();
  }
  return a;
}

struct Emission {
  Table table;
  KeyValues params;
  KeyValues metadata;
  std::optional<Table> extra;
  std::string extra_key;
  std::string timestamp;  // JSON only
};

void write(const Options& o, const Emission& e) {
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!o.output_path.empty()) {
    file.open(o.output_path, std::ios::binary);
    if (!file) fail(ErrorKind::invalid_parameter, "--output: cannot open '" + o.output_path + "'");
    os = &file;
  }
  if (o.format == "csv") {
    output::write_csv(*os, e.table, e.params, e.metadata);
  } else {
    KeyValues meta = e.metadata;
    if (!e.timestamp.empty()) meta.emplace_back("timestamp", e.timestamp);
    output::write_json(*os, e.table, e.params, meta, e.extra ? &*e.extra : nullptr, e.extra_key);
  }
}

KeyValues base_metadata(const Options& o, const std::string& subcommand) {
  return {{"subcommand", subcommand},
          {"seed", static_cast<std::int64_t>(o.seed)},
          {"version", std::string(kVersion)}};
}

void warn(const Options& o, const ModelParams& p) {
  if (o.verbosity < 0) return;
  for (const auto& w : advisories(p)) std::cerr << "warning: " << w << '\n';
}

// Config files may spell keys the way the output does (t_years) or the way
// the flags do (t-years).
class ParamFileFormat : public CLI::ConfigBase {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigBase::from_config(input);
    for (auto& item : items) std::replace(item.name.begin(), item.name.end(), '_', '-');
    return items;
  }
};

bool was_given(const CLI::App& app, const char* flag) {
  const auto* opt = app.get_option_no_throw(flag);
  return opt != nullptr && opt->count() > 0;
}

int run_subcommand(const std::string& name, Options& o, const CLI::App& app) {
  Emission e;
  e.metadata = base_metadata(o, name);

  if (name == "off" || name == "report") {
    warn(o, o.model);
    const OverfitReport rep = overfit_report(o.model);
    e.table = output::report_table(rep);
    if (name == "report") {
      e.table.columns.insert(e.table.columns.begin(), "sigma_tot");
      e.table.rows[0].insert(e.table.rows[0].begin(), sharpe_noise_scale(o.model).sigma_tot);
      e.table.columns.emplace_back("rho_mean");
      e.table.rows[0].emplace_back(rho_mean(o.model));
    }
    e.params = output::model_params(o.model);
  } else if (name == "density") {
    std::vector<double> ys = o.ys;
    if (o.y_count > 0) {
      if (o.y_count < 2) fail(ErrorKind::invalid_parameter, "--y-count must be >= 2");
      for (int i = 0; i < o.y_count; ++i) {
        ys.push_back(o.y_from + (o.y_to - o.y_from) * i / (o.y_count - 1.0));
      }
    }
    if (ys.empty()) fail(ErrorKind::invalid_parameter, "density needs --y or --y-from/--y-to/--y-count");
    e.table.columns = {"y", "rho"};
    for (double y : ys) e.table.rows.push_back({y, rho_pdf(y, o.model)});
    e.params = output::model_params(o.model);
  } else if (name == "poof" || name == "poa") {
    const double poof = rho_tail_prob(o.model);
    const double pc = prob_clear(o.model);
    e.table.single_record = true;
    e.table.columns = {name};
    e.table.rows.push_back({name == "poof" ? poof : pc + (1.0 - pc) * poof});
    e.params = output::model_params(o.model);
  } else if (name == "min-years") {
    if (o.sides != "one" && o.sides != "two") {
      fail(ErrorKind::invalid_parameter, "--sides must be 'one' or 'two'");
    }
    const Sides sides = o.sides == "one" ? Sides::one : Sides::two;
    e.table.single_record = true;
    e.table.columns = {"years"};
    e.table.rows.push_back({min_backtest_years(o.sr, o.confidence, sides)});
    e.params = {{"sr", o.sr}, {"confidence", o.confidence}, {"sides", o.sides}};
  } else if (name == "simulate") {
    const PathConfig cfg = path_config(o);
    warn(o, cfg.model);
    McResult res;
    if (o.policy == "one-off") {
      res = run_one_off(cfg, o.n_paths);
    } else if (o.policy == "until-clear") {
      res = run_until_clear(cfg, o.n_paths, o.max_attempts,
                            o.rebin == "same-path" ? RebinModel::same_path : RebinModel::fresh);
      e.extra = output::attempts_table(res);
      e.extra_key = "attempts_histogram";
    } else {
      res = run_maximal(cfg, o.n_paths);
    }
    e.table = output::mc_table(res);
    e.params = path_params(o);
    e.params.emplace_back("policy", o.policy);
    e.params.emplace_back("n_paths", static_cast<std::int64_t>(o.n_paths));
    if (o.policy == "until-clear") {
      e.params.emplace_back("max_attempts", static_cast<std::int64_t>(o.max_attempts));
      e.params.emplace_back("rebin", o.rebin);
    }
  } else if (name == "grid") {
    GridSpec spec;
    if (!o.preset.empty()) spec = preset(o.preset);
    // Model flags given explicitly override the preset's fixed values.
    auto given = [&](const char* flag) { return was_given(app, flag); };
    if (o.preset.empty() || given("--sr-true")) spec.fixed.sr_true = o.model.sr_true;
    if (o.preset.empty() || given("--theta")) spec.fixed.theta = o.model.theta;
    if (o.preset.empty() || given("--f")) spec.fixed.f = o.model.f;
    if (o.preset.empty() || given("--t-years")) spec.fixed.t_years = o.model.t_years;
    if (o.preset.empty() || given("--sr-correction")) {
      spec.fixed.include_sr_correction = o.model.include_sr_correction;
    }
    spec.fixed.days_per_year = o.model.days_per_year;
    if (!o.axes.empty()) {
      spec.axes.clear();
      for (const auto& a : o.axes) spec.axes.push_back(parse_axis_flag(a));
    }
    if (!o.metrics.empty()) spec.metrics = o.metrics;
    if (o.mc_paths > 0) spec.mc_overlay = McOverlay{path_config(o), o.mc_paths};
    spec.workers = o.workers;
    const GridResult g = grid_evaluate(spec);
    e.table = output::grid_table(g);
    e.timestamp = g.metadata.timestamp;
    e.params = output::model_params(spec.fixed);
    e.params.emplace_back("preset", o.preset);
    for (const auto& a : spec.axes) {
      std::ostringstream ax;
      ax << to_string(a.name) << ':' << output::format_number(a.start) << ':'
         << output::format_number(a.stop) << ':' << a.count;
      e.params.emplace_back("axis_" + std::string(to_string(a.name)), ax.str());
    }
    if (spec.mc_overlay) {
      e.params.emplace_back("mc_paths", static_cast<std::int64_t>(o.mc_paths));
      e.params.emplace_back("n_buckets", static_cast<std::int64_t>(o.n_buckets));
      e.params.emplace_back("mode", o.mode);
    }
  } else if (name == "verify") {
    const PathConfig cfg = path_config(o);
    ComparisonOptions opts;
    opts.until_clear_paths = o.until_clear_paths;
    opts.max_attempts = o.max_attempts;
    const ComparisonReport rep = mc_vs_analytic(cfg, o.n_paths, opts);
    e.table = output::comparison_table(rep);
    e.params = path_params(o);
    e.params.emplace_back("n_paths", static_cast<std::int64_t>(o.n_paths));
    e.params.emplace_back("until_clear_paths", static_cast<std::int64_t>(o.until_clear_paths));
    e.metadata.emplace_back("pass", rep.pass);
    write(o, e);
    return rep.pass ? kExitOk : kExitVerifyFailed;
  }
  write(o, e);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Overfitting factor of backtested strategies: closed form and Monte Carlo."};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value parameter file; flags override it");
  app.config_formatter(std::make_shared<ParamFileFormat>());
  app.allow_config_extras(CLI::config_extras_mode::error);

  app.add_option("--sr-true", o.model.sr_true, "True annualized Sharpe ratio SR_t")->capture_default_str();
  app.add_option("--theta", o.model.theta, "Sharpe threshold")->capture_default_str();
  app.add_option("--f", o.model.f, "Fraction of slices flipped per tweak")->capture_default_str();
  app.add_option("--t-years", o.model.t_years, "Backtest length in years")->capture_default_str();
  app.add_option("--days-per-year", o.model.days_per_year)->capture_default_str();
  app.add_option("--sr-correction", o.model.include_sr_correction,
                 "Keep the SR_daily^2/2 term in the Sharpe noise")
      ->capture_default_str();
  app.add_option("--n-buckets", o.n_buckets, "Number of slices N")->capture_default_str();
  app.add_option("--daily-vol", o.daily_vol)->capture_default_str();
  app.add_option("--seed", o.seed)->envname("OFFLAB_SEED")->capture_default_str();
  app.add_option("--mode", o.mode)->check(CLI::IsMember({"gaussian", "path"}))->capture_default_str();
  app.add_option("--slice-vol", o.slice_vol)
      ->check(CLI::IsMember({"pooled", "per-slice"}))
      ->capture_default_str();
  app.add_option("--min-days-per-slice", o.min_days_per_slice)->capture_default_str();
  app.add_option("--workers", o.workers, "Worker threads (0: all cores)")->capture_default_str();
  app.add_option("--format", o.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_option("-o,--output", o.output_path, "Output file (default: stdout)");
  app.add_flag("-v,--verbose", o.verbosity);

  auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };
  sub("off", "Overfitting factor and all closed-form outputs");
  sub("report", "Closed-form outputs plus noise scale and the mean of rho");
  auto* density = sub("density", "Conditioned density rho(y)");
  density->add_option("--y", o.ys, "Evaluation points");
  density->add_option("--y-from", o.y_from);
  density->add_option("--y-to", o.y_to);
  density->add_option("--y-count", o.y_count);
  sub("poof", "Probability that one tweak lifts a failing strategy above theta");
  sub("poa", "Probability that a one-off attempt is accepted");
  auto* years = sub("min-years", "Backtest years needed to distinguish a Sharpe from zero");
  years->add_option("--sr", o.sr)->capture_default_str();
  years->add_option("--confidence", o.confidence)->capture_default_str();
  years->add_option("--sides", o.sides)->check(CLI::IsMember({"one", "two"}))->capture_default_str();
  auto* simulate = sub("simulate", "Monte Carlo of the researcher's tweak process");
  simulate->add_option("--policy", o.policy)
      ->check(CLI::IsMember({"one-off", "until-clear", "maximal"}))
      ->capture_default_str();
  simulate->add_option("--n-paths", o.n_paths)->capture_default_str();
  simulate->add_option("--max-attempts", o.max_attempts)->capture_default_str();
  simulate->add_option("--rebin", o.rebin)->check(CLI::IsMember({"fresh", "same-path"}))->capture_default_str();
  auto* grid = sub("grid", "Parameter sweeps (named presets or custom axes)");
  grid->add_option("--preset", o.preset)->check(CLI::IsMember(preset_names()));
  grid->add_option("--axis", o.axes, "name:start:stop:count (one or two)");
  grid->add_option("--metrics", o.metrics)->delimiter(',');
  grid->add_option("--mc-paths", o.mc_paths, "Overlay one-off MC estimates (0: off)");
  auto* verify = sub("verify", "Monte Carlo versus closed form at a reference point");
  verify->add_option("--n-paths", o.n_paths)->capture_default_str();
  verify->add_option("--until-clear-paths", o.until_clear_paths)->capture_default_str();
  verify->add_option("--max-attempts", o.max_attempts)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("invalid_parameter", e.what());
    return kExitParameter;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  if (name == "verify") {
    // Documented reference point, used for every flag left unset.
    auto unset = [&](const char* flag) { return !was_given(app, flag) && !was_given(*verify, flag); };
    if (unset("--sr-true")) o.model.sr_true = 0.3;
    if (unset("--theta")) o.model.theta = 0.7;
    if (unset("--f")) o.model.f = 0.025;
    if (unset("--t-years")) o.model.t_years = 10.0;
    if (unset("--sr-correction")) o.model.include_sr_correction = false;
    if (unset("--n-buckets")) o.n_buckets = 40;
    if (unset("--n-paths")) o.n_paths = 1000000;
  }

  try {
    return run_subcommand(name, o, app);
  } catch (const Error& e) {
    emit_error(std::string(to_string(e.kind())), e.what());
    return is_parameter_error(e.kind()) ? kExitParameter : kExitNumeric;
  }
}
