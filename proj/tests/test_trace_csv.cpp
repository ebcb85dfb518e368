#include "doctest.h"

#include <filesystem>

#include "slipopt/suites.hpp"
#include "slipopt/synthetic.hpp"
#include "slipopt/trace_csv.hpp"

using namespace slipopt;

TEST_CASE("trace header and columns") {
  CHECK(kTraceHeader == "t,grad_norm,y_err,z_err,eps_err,phi,calls_gxF,calls_gyF,calls_gyG,calls_hxy,calls_hyy");
  const auto cols = trace_columns();
  REQUIRE(cols.size() == 11);
  CHECK(cols.front() == "t");
  CHECK(cols.back() == "calls_hyy");
}

TEST_CASE("missing metrics are empty fields") {
  TraceRecord r;
  r.t = 3;
  r.phi = 0.25;
  r.calls_gyG = 9;
  const std::string text = format_trace({r});
  CHECK(text == std::string(kTraceHeader) + "\n3,,,,,0.25,0,0,9,0,0\n");
  const Trace back = parse_trace(text);
  REQUIRE(back.size() == 1);
  CHECK(back[0] == r);
}

TEST_CASE("emitted traces round-trip byte for byte") {
  const BilevelProblem p = make_quadratic(q2_spec(), q2_ensemble_noise());
  const Trace t = slip_run(p, q2_benchmark_schedule(), q2_benchmark_start(), 4).trace;
  const std::string once = format_trace(t);
  const Trace parsed = parse_trace(once);
  CHECK(parsed == t);
  CHECK(format_trace(parsed) == once);

  const auto path = std::filesystem::temp_directory_path() / "slipopt_trace_roundtrip.csv";
  write_trace(path, t);
  CHECK(read_trace(path) == t);
  std::filesystem::remove(path);
}

TEST_CASE("malformed traces are rejected") {
  const std::string h = std::string(kTraceHeader) + "\n";
  CHECK_THROWS_AS(parse_trace("t,grad\n1,2\n"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_trace(h + "1,2,3\n"), doctest::Contains("line 2"), std::runtime_error);
  CHECK_THROWS_AS(parse_trace(h + "1,abc,,,,,0,0,0,0,0\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_trace(h + "1,,,,,,0,0,-1,0,0\n"), std::runtime_error);
  CHECK(parse_trace(h).empty());
  CHECK_THROWS_AS(read_trace("/nonexistent/trace.csv"), std::runtime_error);
}

TEST_CASE("trace_value") {
  TraceRecord r;
  r.t = 5;
  r.grad_norm = 0.5;
  r.calls_hxy = 7;
  CHECK(trace_value(r, "t") == 5.0);
  CHECK(trace_value(r, "grad_norm") == 0.5);
  CHECK_FALSE(trace_value(r, "y_err").has_value());
  CHECK(trace_value(r, "calls_hxy") == 7.0);
  CHECK_THROWS_WITH_AS(trace_value(r, "loss"), doctest::Contains("grad_norm"), std::invalid_argument);
}
