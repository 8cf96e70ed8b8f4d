#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "edhdp/errors.hpp"
#include "edhdp/simulation.hpp"

namespace edhdp {

// Trace CSV schema:
//   k,x1..xm,u1..un,event,r,V_hat,td_error,eta,dwc_sq,dwa_sq
// Reals use 17 significant digits ("%.17g"), so every double round-trips
// exactly. td_error at k = 0 is written as "nan". event is 0 or 1.

/// Text for a double that parses back to the same value.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trace_csv_header(std::size_t m, std::size_t n) {
  std::string h = "k";
  for (std::size_t i = 1; i <= m; ++i) h += ",x" + std::to_string(i);
  for (std::size_t i = 1; i <= n; ++i) h += ",u" + std::to_string(i);
  h += ",event,r,V_hat,td_error,eta,dwc_sq,dwa_sq";
  return h;
}

inline void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << trace_csv_header(trace.state_dim, trace.control_dim) << '\n';
  for (const auto& rec : trace.records) {
    out << rec.k;
    for (Eigen::Index i = 0; i < rec.x.size(); ++i) out << ',' << format_real(rec.x(i));
    for (Eigen::Index i = 0; i < rec.u.size(); ++i) out << ',' << format_real(rec.u(i));
    out << ',' << (rec.event ? 1 : 0) << ',' << format_real(rec.reward) << ','
        << format_real(rec.value) << ',' << format_real(rec.td_error) << ','
        << format_real(rec.eta) << ',' << format_real(rec.critic_delta_sq) << ','
        << format_real(rec.action_delta_sq) << '\n';
  }
}

inline void emit_trace_csv(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_trace_csv(out, trace);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

/// The CSV columns of one trace row.
struct CsvRow {
  std::size_t k = 0;
  Vector x;
  Vector u;
  bool event = false;
  double reward = 0.0;
  double value = 0.0;
  double td_error = 0.0;
  double eta = 0.0;
  double critic_delta_sq = 0.0;
  double action_delta_sq = 0.0;
};

struct CsvTrace {
  std::size_t state_dim = 0;
  std::size_t control_dim = 0;
  std::vector<CsvRow> rows;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_real(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw IoError("trace csv line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

}  // namespace detail

inline CsvTrace parse_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("trace csv: missing header");
  const auto header = detail::split_csv_line(line);
  CsvTrace t;
  for (const auto& col : header) {
    if (col.size() > 1 && col[0] == 'x' && std::isdigit(static_cast<unsigned char>(col[1])))
      ++t.state_dim;
    if (col.size() > 1 && col[0] == 'u' && std::isdigit(static_cast<unsigned char>(col[1])))
      ++t.control_dim;
  }
  if (trace_csv_header(t.state_dim, t.control_dim) != line)
    throw IoError("trace csv: unexpected header '" + line + "'");
  const std::size_t width = header.size();
  const auto m = static_cast<Eigen::Index>(t.state_dim);
  const auto n = static_cast<Eigen::Index>(t.control_dim);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != width)
      throw IoError("trace csv line " + std::to_string(line_no) + ": expected " +
                    std::to_string(width) + " cells");
    CsvRow row;
    std::size_t c = 0;
    row.k = static_cast<std::size_t>(std::stoull(cells[c++]));
    row.x.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) row.x(i) = detail::parse_real(cells[c++], line_no);
    row.u.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) row.u(i) = detail::parse_real(cells[c++], line_no);
    row.event = cells[c++] == "1";
    row.reward = detail::parse_real(cells[c++], line_no);
    row.value = detail::parse_real(cells[c++], line_no);
    row.td_error = detail::parse_real(cells[c++], line_no);
    row.eta = detail::parse_real(cells[c++], line_no);
    row.critic_delta_sq = detail::parse_real(cells[c++], line_no);
    row.action_delta_sq = detail::parse_real(cells[c++], line_no);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_trace_csv(in);
}

}  // namespace edhdp
