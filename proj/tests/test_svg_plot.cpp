#include "doctest.h"

#include <stdexcept>
#include <string>

#include "slipopt/svg_plot.hpp"

using namespace slipopt;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

std::size_t vertices(const std::string& svg) {
  const std::size_t start = svg.find("points=\"") + 8;
  const std::size_t end = svg.find('"', start);
  return count(svg.substr(start, end - start), ",");
}

}  // namespace

TEST_CASE("one polyline vertex per trace row") {
  PlotSeries s{"seed1", {0, 1, 2, 3, 4}, {1.0, 0.5, 0.25, 0.125, 0.0625}};
  const std::string svg = render_svg({s}, {"", "t", "grad_norm"});
  CHECK(count(svg, "<polyline") == 1);
  CHECK(vertices(svg) == 5);
  CHECK(svg.find("grad_norm") != std::string::npos);
  CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
}

TEST_CASE("legend has one entry per series") {
  PlotSeries a{"slip", {0, 1}, {1.0, 0.5}};
  PlotSeries b{"masoba", {0, 1}, {1.0, 0.7}};
  const std::string svg = render_svg({a, b}, {});
  CHECK(count(svg, "class=\"legend-entry\"") == 2);
  CHECK(svg.find(">slip<") != std::string::npos);
  CHECK(svg.find(">masoba<") != std::string::npos);
}

TEST_CASE("log scale needs positive values") {
  PlotOptions opts;
  opts.log_y = true;
  CHECK_NOTHROW(render_svg({{"a", {0, 1}, {1.0, 1e-3}}}, opts));
  CHECK_THROWS_AS(render_svg({{"a", {0, 1}, {1.0, 0.0}}}, opts), std::invalid_argument);
  CHECK_THROWS_AS(render_svg({{"a", {0, 1}, {1.0}}}, {}), std::invalid_argument);
}

TEST_CASE("output bytes depend only on the input") {
  PlotSeries s{"a&b", {0, 1, 2}, {3.0, 1.0, 2.0}};
  const std::string one = render_svg({s}, {"title <x>", "t", "phi"});
  CHECK(one == render_svg({s}, {"title <x>", "t", "phi"}));
  CHECK(one.find("a&amp;b") != std::string::npos);
  CHECK(one.find("title &lt;x&gt;") != std::string::npos);
  CHECK_NOTHROW(render_svg({}, {}));
  CHECK_NOTHROW(render_svg({{"flat", {0, 1}, {2.0, 2.0}}}, {}));
}
