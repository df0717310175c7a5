#pragma once

// Tabular results and their CSV / JSON encodings. Files are written to a
// sibling temp file and renamed into place, so a failed run never leaves a
// truncated output behind.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "arbsim/config.hpp"
#include "arbsim/errors.hpp"

namespace arbsim {

using Cell = std::variant<std::monostate, std::string, double, std::uint64_t>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
      throw OutputError("table: row has " + std::to_string(row.size()) + " cells, expected " +
                        std::to_string(columns.size()));
    rows.push_back(std::move(row));
  }
};

/// Six significant digits, printf %g style.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string cell_text(const Cell& c) {
  struct V {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(const std::string& s) const { return csv_escape(s); }
    std::string operator()(double d) const { return format_number(d); }
    std::string operator()(std::uint64_t u) const { return std::to_string(u); }
  };
  return std::visit(V{}, c);
}

inline nlohmann::json cell_json(const Cell& c) {
  struct V {
    nlohmann::json operator()(std::monostate) const { return nullptr; }
    nlohmann::json operator()(const std::string& s) const { return s; }
    nlohmann::json operator()(double d) const {
      if (!std::isfinite(d)) return nullptr;
      // Round-trip through the CSV text so both encodings carry the same digits.
      return std::stod(format_number(d));
    }
    nlohmann::json operator()(std::uint64_t u) const { return u; }
  };
  return std::visit(V{}, c);
}

}  // namespace detail

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    out += (i ? "," : "") + detail::csv_escape(t.columns[i]);
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + detail::cell_text(row[i]);
    out += '\n';
  }
  return out;
}

inline std::string to_json(const Table& t) {
  nlohmann::json doc;
  doc["columns"] = t.columns;
  doc["rows"] = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) r.push_back(detail::cell_json(c));
    doc["rows"].push_back(std::move(r));
  }
  return doc.dump(2) + "\n";
}

inline std::string encode(const Table& t, OutputFormat f) {
  return f == OutputFormat::Csv ? to_csv(t) : to_json(t);
}

/// Writes `content` to `path` via temp file + rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError("cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw OutputError("write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw OutputError("cannot rename into '" + path.string() + "'");
  }
}

/// Empty path means stdout.
inline void write_table(const Table& t, const OutputSpec& out) {
  const std::string text = encode(t, out.format);
  if (out.path.empty()) {
    std::cout << text << std::flush;
    if (!std::cout) throw OutputError("write to stdout failed");
    return;
  }
  write_atomic(out.path, text);
}

/// One labelled curve: y[metric][k] belongs to x[k].
struct SeriesResult {
  std::string label;
  std::vector<double> x;
  std::vector<std::vector<double>> y;  // indexed like the metric list
};

inline std::string_view metric_unit(std::string_view metric) {
  if (metric == "nst") return "bps";
  if (metric == "cad") return "us";
  return "";
}

/// Figure layout: x column, then <metric>_<label>[_<unit>] per metric and label.
inline Table series_table(const std::vector<SeriesResult>& results, std::string_view x_name,
                          const std::vector<std::string>& metrics) {
  if (results.empty()) throw ConfigError("emit_series: no results");
  for (const auto& r : results) {
    if (r.label.empty()) throw ConfigError("emit_series: empty series label");
    if (r.x != results.front().x) throw ConfigError("emit_series: series '" + r.label + "' has a different x grid");
    if (r.y.size() != metrics.size()) throw ConfigError("emit_series: series '" + r.label + "' metric count mismatch");
  }
  Table t;
  t.columns.emplace_back(x_name);
  for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
    for (const auto& r : results) {
      std::string col = metrics[mi] + "_" + r.label;
      if (auto unit = metric_unit(metrics[mi]); !unit.empty()) col += "_" + std::string(unit);
      t.columns.push_back(std::move(col));
    }
  }
  const auto& xs = results.front().x;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    std::vector<Cell> row{xs[k]};
    for (std::size_t mi = 0; mi < metrics.size(); ++mi)
      for (const auto& r : results) row.emplace_back(r.y[mi].at(k));
    t.add_row(std::move(row));
  }
  return t;
}

inline Table emit_series(const std::vector<SeriesResult>& results, const RunManifest& m) {
  const std::string x_name = m.sweep ? std::string(to_string(m.sweep->axis)) : "n_nodes";
  Table t = series_table(results, x_name, m.output.metrics);
  write_table(t, m.output);
  return t;
}

}  // namespace arbsim
