#include "slipopt/trace_csv.hpp"

#include <cerrno>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace slipopt {

namespace {

void append_real(std::string& out, const std::optional<double>& v) {
  if (!v) return;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  out += buf;
}

void append_uint(std::string& out, std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%" PRIu64, v);
  out += buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

[[noreturn]] void bad(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("trace csv line " + std::to_string(line_no) + ": " + what);
}

std::optional<double> parse_real(const std::string& s, std::size_t line_no) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) bad(line_no, "not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& s, std::size_t line_no) {
  if (s.empty() || s[0] == '-') bad(line_no, "expected a non-negative integer, got '" + s + "'");
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) bad(line_no, "bad integer '" + s + "'");
  return v;
}

}  // namespace

std::vector<std::string> trace_columns() { return split(std::string(kTraceHeader)); }

std::string format_trace(const Trace& trace) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const TraceRecord& r : trace) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%" PRId64, r.t);
    out += buf;
    for (const auto* v : {&r.grad_norm, &r.y_err, &r.z_err, &r.eps_err, &r.phi}) {
      out += ',';
      append_real(out, *v);
    }
    for (std::uint64_t c : {r.calls_gxF, r.calls_gyF, r.calls_gyG, r.calls_hxy, r.calls_hyy}) {
      out += ',';
      append_uint(out, c);
    }
    out += '\n';
  }
  return out;
}

void write_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const std::string text = format_trace(trace);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("write to '" + path.string() + "' failed");
}

Trace parse_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) bad(1, "header does not match '" + std::string(kTraceHeader) + "'");
  Trace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 11) bad(line_no, "expected 11 fields, got " + std::to_string(f.size()));
    TraceRecord r;
    char* end = nullptr;
    r.t = std::strtoll(f[0].c_str(), &end, 10);
    if (f[0].empty() || end != f[0].c_str() + f[0].size()) bad(line_no, "bad iteration index '" + f[0] + "'");
    r.grad_norm = parse_real(f[1], line_no);
    r.y_err = parse_real(f[2], line_no);
    r.z_err = parse_real(f[3], line_no);
    r.eps_err = parse_real(f[4], line_no);
    r.phi = parse_real(f[5], line_no);
    r.calls_gxF = parse_uint(f[6], line_no);
    r.calls_gyF = parse_uint(f[7], line_no);
    r.calls_gyG = parse_uint(f[8], line_no);
    r.calls_hxy = parse_uint(f[9], line_no);
    r.calls_hyy = parse_uint(f[10], line_no);
    trace.push_back(r);
  }
  return trace;
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open trace '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_trace(ss.str());
}

std::optional<double> trace_value(const TraceRecord& row, const std::string& column) {
  if (column == "t") return static_cast<double>(row.t);
  if (column == "grad_norm") return row.grad_norm;
  if (column == "y_err") return row.y_err;
  if (column == "z_err") return row.z_err;
  if (column == "eps_err") return row.eps_err;
  if (column == "phi") return row.phi;
  if (column == "calls_gxF") return static_cast<double>(row.calls_gxF);
  if (column == "calls_gyF") return static_cast<double>(row.calls_gyF);
  if (column == "calls_gyG") return static_cast<double>(row.calls_gyG);
  if (column == "calls_hxy") return static_cast<double>(row.calls_hxy);
  if (column == "calls_hyy") return static_cast<double>(row.calls_hyy);
  throw std::invalid_argument("unknown trace column '" + column + "'; available: " + std::string(kTraceHeader));
}

}  // namespace slipopt
