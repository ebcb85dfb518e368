#pragma once

#include <string>
#include <vector>

namespace slipopt {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  bool log_y = false;
  int width = 720;
  int height = 480;
};

/// Line chart with one polyline per series, axes with tick labels and a
/// legend. Output bytes depend only on the inputs. With log_y every value
/// must be positive, otherwise std::invalid_argument.
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options);

}  // namespace slipopt
