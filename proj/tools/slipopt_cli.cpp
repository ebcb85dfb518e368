// slipopt command-line driver.
//
//   slipopt run --config exp.ini [--out results/q2] [--workers 4]
//   slipopt sweep --config exp.ini --eps 0.1,0.05,0.025 [--out sweep.csv]
//   slipopt verify --suite all
//   slipopt plot results/q2_seed1.csv results/q2_seed2.csv --metric grad_norm -o q2.svg --logy

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slipopt/config.hpp"
#include "slipopt/experiment.hpp"
#include "slipopt/suites.hpp"
#include "slipopt/svg_plot.hpp"
#include "slipopt/trace_csv.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kRunFailed = 2, kVerifyFailed = 3 };

int cmd_run(const std::string& config, const std::string& out, int workers) {
  slipopt::RunConfig cfg = slipopt::load_config(config);
  if (!out.empty()) cfg.run.out = out;
  const slipopt::ExperimentOutcome res = slipopt::run_experiment(cfg, workers);
  for (const auto& s : res.seeds) {
    std::printf("seed %llu: %s, %zu rows -> %s\n", static_cast<unsigned long long>(s.seed),
                s.status == slipopt::RunStatus::Diverged ? "FAILED" : slipopt::to_string(s.status).c_str(), s.rows,
                s.trace_path.string().c_str());
    if (s.failed_at) std::printf("  stopped at iteration %lld\n", static_cast<long long>(*s.failed_at));
  }
  std::printf("metadata: %s\n", res.metadata_path.string().c_str());
  return res.any_failed ? kRunFailed : kOk;
}

int cmd_sweep(const std::string& config, const std::string& eps_text, const std::string& out) {
  const slipopt::RunConfig cfg = slipopt::load_config(config);
  const std::vector<double> eps = slipopt::parse_real_list(eps_text);
  const std::string csv = slipopt::format_sweep_csv(slipopt::sweep_eps(cfg, eps));
  if (out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + out + "'");
    f << csv;
    std::printf("summary: %s\n", out.c_str());
  }
  return kOk;
}

int cmd_verify(const std::string& suite) {
  const auto checks = slipopt::run_suite(suite);
  int failed = 0;
  for (const auto& c : checks) {
    std::printf("%s %s/%s: %s\n", c.pass ? "PASS" : "FAIL", c.suite.c_str(), c.name.c_str(), c.detail.c_str());
    if (!c.pass) ++failed;
  }
  std::printf("%s: %zu checks, %d failed\n", failed ? "FAIL" : "PASS", checks.size(), failed);
  return failed ? kVerifyFailed : kOk;
}

int cmd_plot(const std::vector<std::string>& traces, const std::string& metric, const std::string& out, bool logy,
             const std::string& title) {
  const auto columns = slipopt::trace_columns();
  if (metric == "t" || std::find(columns.begin(), columns.end(), metric) == columns.end()) {
    std::string list;
    for (const auto& c : columns) {
      if (c != "t") list += (list.empty() ? "" : ", ") + c;
    }
    std::fprintf(stderr, "error: unknown metric '%s'; available columns: %s\n", metric.c_str(), list.c_str());
    return kUsage;
  }
  std::vector<slipopt::PlotSeries> series;
  for (const auto& path : traces) {
    slipopt::PlotSeries s;
    s.label = std::filesystem::path(path).stem().string();
    for (const auto& row : slipopt::read_trace(path)) {
      if (const auto v = slipopt::trace_value(row, metric)) {
        s.x.push_back(static_cast<double>(row.t));
        s.y.push_back(*v);
      }
    }
    series.push_back(std::move(s));
  }
  slipopt::PlotOptions opts;
  opts.title = title;
  opts.y_label = metric;
  opts.log_y = logy;
  std::string svg;
  try {
    svg = slipopt::render_svg(series, opts);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + out + "'");
  f << svg;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic bilevel optimization runs, sweeps, checks and plots"};
  app.require_subcommand(1);

  std::string config, out, eps_text, suite = "all", metric, title;
  int workers = 0;
  bool logy = false;
  std::vector<std::string> traces;

  auto* run = app.add_subcommand("run", "Run every seed of a config; one trace CSV per seed plus metadata");
  run->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output path prefix (overrides [run] out)");
  run->add_option("--workers", workers, "Worker threads (overrides [run] workers)")->check(CLI::NonNegativeNumber);

  auto* sweep = app.add_subcommand("sweep", "Evaluate the theorem schedule over a list of accuracies");
  sweep->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--eps", eps_text, "Comma-separated accuracies")->required();
  sweep->add_option("--out", out, "Summary CSV path (default: stdout)");

  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("--suite", suite, "Suite name")->check(CLI::IsMember(slipopt::suite_names()));

  auto* plot = app.add_subcommand("plot", "Line chart of one trace column");
  plot->add_option("traces", traces, "Trace CSV files")->required()->check(CLI::ExistingFile);
  plot->add_option("--metric", metric, "Column to plot")->required();
  plot->add_option("-o,--output", out, "Output SVG path")->required();
  plot->add_flag("--logy", logy, "Logarithmic y axis");
  plot->add_option("--title", title, "Chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(config, out, workers);
    if (*sweep) return cmd_sweep(config, eps_text, out);
    if (*verify) return cmd_verify(suite);
    if (*plot) return cmd_plot(traces, metric, out, logy, title);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  return kUsage;
}
