#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace slipopt {

/// Metrics after main-loop iteration t, evaluated at (x_t, y_t, z_t) and
/// m_{t+1}. Missing metrics are empty.
struct TraceRecord {
  std::int64_t t = 0;
  std::optional<double> grad_norm;  ///< |grad Phi(x_t)|
  std::optional<double> y_err;      ///< |y_t - y*(x_t)|
  std::optional<double> z_err;      ///< |z_t - z*(x_t)|
  std::optional<double> eps_err;    ///< |m_{t+1} - grad Phi(x_t)|
  std::optional<double> phi;        ///< Phi(x_t)
  std::uint64_t calls_gxF = 0;
  std::uint64_t calls_gyF = 0;
  std::uint64_t calls_gyG = 0;
  std::uint64_t calls_hxy = 0;
  std::uint64_t calls_hyy = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

using Trace = std::vector<TraceRecord>;

}  // namespace slipopt
