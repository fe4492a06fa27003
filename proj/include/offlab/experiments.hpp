#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "offlab/analytic.hpp"
#include "offlab/mc.hpp"

namespace offlab {

inline constexpr std::string_view kVersion = "offlab 1.0.0";

enum class Axis { sr_true, theta, f, t_years };

std::string_view to_string(Axis axis) noexcept;
std::optional<Axis> parse_axis(std::string_view name) noexcept;

struct AxisSpec {
  Axis name = Axis::t_years;
  double start = 0.0;
  double stop = 0.0;
  int count = 2;

  /// count linearly spaced values from start to stop inclusive.
  std::vector<double> values() const;
};

struct McOverlay {
  PathConfig config;  // model is replaced by each grid point's parameters
  std::size_t n_paths = 10000;
};

struct GridSpec {
  ModelParams fixed;
  std::vector<AxisSpec> axes;        // one or two; the last axis varies fastest
  std::vector<std::string> metrics;  // OverfitReport field names
  std::optional<McOverlay> mc_overlay;
  unsigned workers = 0;

  void validate() const;
};

/// Names of the OverfitReport fields, in output order.
const std::vector<std::string>& report_metric_names();

/// Value of one OverfitReport field; NaN when the field is absent.
double report_metric(const OverfitReport& report, std::string_view name);

struct GridRow {
  std::vector<double> axis_values;
  ModelParams params;
  std::vector<double> metrics;  // aligned with GridResult::metric_names; NaN if not computed
  std::string status = "ok";    // "ok" or "<error kind>: <message>"
  std::optional<McResult> mc;
};

struct GridMetadata {
  std::string timestamp;
  std::uint64_t seed = 0;
  std::string version{kVersion};
};

struct GridResult {
  std::vector<std::string> axis_names;
  std::vector<std::string> metric_names;
  std::vector<GridRow> rows;  // grid index order
  GridMetadata metadata;
};

/// Evaluates every grid point. Analytic failures become the row's status.
GridResult grid_evaluate(const GridSpec& spec);

/// Named sweeps: "fig2" (OFF vs T), "fig3" (PoOF vs T), "fig4"
/// (OFF vs f across sr_true), "fig5" (OFF vs f across theta).
GridSpec preset(std::string_view name);
const std::vector<std::string>& preset_names();

struct ComparisonRow {
  std::string metric;
  double analytic = 0.0;
  double mc = 0.0;
  double se = 0.0;
  double z = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  double effective_f = 0.0;
  bool pass = false;  // every |z| < kComparisonZ
};

inline constexpr double kComparisonZ = 4.0;

struct ComparisonOptions {
  std::size_t until_clear_paths = 0;  // 0 skips the until-clear comparison
  std::uint64_t max_attempts = 10000;
};

/// MC-versus-closed-form table. The analytic side is evaluated at the
/// simulation's effective flip fraction round(f N) / N.
ComparisonReport mc_vs_analytic(const PathConfig& config, std::size_t n_paths,
                                const ComparisonOptions& options = {});

}  // namespace offlab
