#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "offlab/analytic.hpp"
#include "offlab/experiments.hpp"
#include "offlab/mc.hpp"

namespace offlab::output {

using Cell = std::variant<std::monostate, double, std::int64_t, bool, std::string>;
using KeyValues = std::vector<std::pair<std::string, Cell>>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  bool single_record = false;  // JSON emits an object rather than an array
};

/// Decimal with 12 significant digits; NaN and infinities spelled out.
std::string format_number(double v);

/// Header line, then one line per row. Resolved parameters and metadata are
/// appended to every row as trailing columns (parameters prefixed "param_");
/// string cells are always double-quoted with embedded quotes doubled.
void write_csv(std::ostream& os, const Table& table, const KeyValues& params,
               const KeyValues& metadata);

/// One object with "params", "results" and "metadata" keys. Numbers are
/// JSON numbers; NaN and infinities become null.
void write_json(std::ostream& os, const Table& table, const KeyValues& params,
                const KeyValues& metadata, const Table* extra = nullptr,
                const std::string& extra_key = {});

Table report_table(const OverfitReport& report);
Table mc_table(const McResult& result);
Table attempts_table(const McResult& result);
Table grid_table(const GridResult& result);
Table comparison_table(const ComparisonReport& report);

KeyValues model_params(const ModelParams& params);

}  // namespace offlab::output
