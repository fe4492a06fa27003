#include "offlab/output.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "json.hpp"

namespace offlab::output {
namespace {

using nlohmann::ordered_json;

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_cell(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "";
        else if constexpr (std::is_same_v<T, double>) return format_number(v);
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return quote(v);
      },
      cell);
}

ordered_json json_cell(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return nullptr;
          return v;
        } else return v;
      },
      cell);
}

ordered_json json_table(const Table& t) {
  auto record = [&](const std::vector<Cell>& row) {
    ordered_json obj = ordered_json::object();
    for (std::size_t i = 0; i < t.columns.size(); ++i) obj[t.columns[i]] = json_cell(row[i]);
    return obj;
  };
  if (t.single_record && t.rows.size() == 1) return record(t.rows.front());
  ordered_json arr = ordered_json::array();
  for (const auto& row : t.rows) arr.push_back(record(row));
  return arr;
}

ordered_json json_kv(const KeyValues& kv) {
  ordered_json obj = ordered_json::object();
  for (const auto& [k, v] : kv) obj[k] = json_cell(v);
  return obj;
}

Cell opt(const std::optional<double>& v) {
  return v ? Cell{*v} : Cell{};
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_csv(std::ostream& os, const Table& table, const KeyValues& params,
               const KeyValues& metadata) {
  std::string line;
  auto emit = [&] {
    os << line << '\n';
    line.clear();
  };
  auto append = [&](const std::string& s) {
    if (!line.empty()) line += ',';
    line += s;
  };
  for (const auto& c : table.columns) append(c);
  for (const auto& kv : params) append("param_" + kv.first);
  for (const auto& kv : metadata) append(kv.first);
  emit();
  for (const auto& row : table.rows) {
    line.clear();
    bool first = true;
    auto cell = [&](const Cell& c) {
      if (!first) line += ',';
      first = false;
      line += csv_cell(c);
    };
    for (const auto& c : row) cell(c);
    for (const auto& kv : params) cell(kv.second);
    for (const auto& kv : metadata) {
      // Metadata is always quoted, numbers included.
      const Cell& c = kv.second;
      cell(std::holds_alternative<std::string>(c) ? c : Cell{csv_cell(c)});
    }
    emit();
  }
}

void write_json(std::ostream& os, const Table& table, const KeyValues& params,
                const KeyValues& metadata, const Table* extra, const std::string& extra_key) {
  ordered_json doc;
  doc["params"] = json_kv(params);
  doc["results"] = json_table(table);
  if (extra != nullptr) doc[extra_key] = json_table(*extra);
  doc["metadata"] = json_kv(metadata);
  os << doc.dump(2) << '\n';
}

Table report_table(const OverfitReport& r) {
  Table t;
  t.single_record = true;
  t.columns = report_metric_names();
  t.rows.push_back({r.p_clear, r.e_sr_given_clear, opt(r.poof), opt(r.e_srm_given_accept), r.e_in,
                    r.e_out, r.off, r.poa, r.off_asymptote});
  return t;
}

Table mc_table(const McResult& res) {
  Table t;
  t.columns = {"policy", "metric", "mean", "se", "n_paths", "conditioned_paths", "effective_f"};
  for (const auto& [name, est] : res.estimates) {
    t.rows.push_back({res.policy, name, est.mean, est.se, static_cast<std::int64_t>(res.n_paths),
                      static_cast<std::int64_t>(res.conditioned_paths), res.effective_f});
  }
  for (const auto& name : res.absent) {
    t.rows.push_back({res.policy, name, Cell{}, Cell{}, static_cast<std::int64_t>(res.n_paths),
                      static_cast<std::int64_t>(res.conditioned_paths), res.effective_f});
  }
  return t;
}

Table attempts_table(const McResult& res) {
  Table t;
  t.columns = {"attempts", "paths"};
  for (const auto& [a, n] : res.attempts_histogram) {
    t.rows.push_back({static_cast<std::int64_t>(a), static_cast<std::int64_t>(n)});
  }
  return t;
}

Table grid_table(const GridResult& g) {
  Table t;
  t.columns = g.axis_names;
  for (const auto& m : g.metric_names) t.columns.push_back(m);
  const bool has_mc = !g.rows.empty() && g.rows.front().mc.has_value();
  const std::vector<std::string> mc_metrics{"p_clear", "poof", "poa", "corr_sr_srm"};
  if (has_mc) {
    for (const auto& m : mc_metrics) {
      t.columns.push_back("mc_" + m);
      t.columns.push_back("mc_" + m + "_se");
    }
  }
  t.columns.push_back("status");
  for (const auto& row : g.rows) {
    std::vector<Cell> cells;
    for (double v : row.axis_values) cells.emplace_back(v);
    for (double v : row.metrics) cells.emplace_back(v);
    if (has_mc) {
      for (const auto& m : mc_metrics) {
        if (row.mc && row.mc->has(m)) {
          cells.emplace_back(row.mc->at(m).mean);
          cells.emplace_back(row.mc->at(m).se);
        } else {
          cells.emplace_back();
          cells.emplace_back();
        }
      }
    }
    cells.emplace_back(row.status);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Table comparison_table(const ComparisonReport& rep) {
  Table t;
  t.columns = {"metric", "analytic", "mc", "se", "z", "pass"};
  for (const auto& r : rep.rows) {
    t.rows.push_back({r.metric, r.analytic, r.mc, r.se, r.z, std::abs(r.z) < kComparisonZ});
  }
  return t;
}

KeyValues model_params(const ModelParams& p) {
  return {{"sr_true", p.sr_true},
          {"theta", p.theta},
          {"f", p.f},
          {"t_years", p.t_years},
          {"days_per_year", static_cast<std::int64_t>(p.days_per_year)},
          {"include_sr_correction", p.include_sr_correction}};
}

}  // namespace offlab::output
