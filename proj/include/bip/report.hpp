#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "bip/common.hpp"

// Flat check-report rows shared by every CLI subcommand: one row per verified
// statement, emitted as CSV for plotting or as JSON for machine consumption.

namespace bip {

struct CheckRow {
  std::string check_id;
  std::string statement;  // human-readable description of what was checked
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool pass = false;
};

inline bool all_pass(const std::vector<CheckRow>& rows) {
  for (const CheckRow& r : rows)
    if (!r.pass) return false;
  return true;
}

namespace detail {

inline std::string csv_quote(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

}  // namespace detail

// Deterministic CSV: rows sorted by check_id (stable), doubles printed with
// %.12g, header always present.
inline std::string emit_report_csv(std::vector<CheckRow> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const CheckRow& a, const CheckRow& b) { return a.check_id < b.check_id; });
  std::string out = "check_id,statement,lhs,rhs,margin,pass\n";
  for (const CheckRow& r : rows) {
    out += detail::csv_quote(r.check_id);
    out += ',';
    out += detail::csv_quote(r.statement);
    out += ',';
    out += format_double(r.lhs);
    out += ',';
    out += format_double(r.rhs);
    out += ',';
    out += format_double(r.margin);
    out += ',';
    out += r.pass ? "true" : "false";
    out += '\n';
  }
  return out;
}

}  // namespace bip
