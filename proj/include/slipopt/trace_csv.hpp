#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slipopt/trace.hpp"

namespace slipopt {

inline constexpr std::string_view kTraceHeader =
    "t,grad_norm,y_err,z_err,eps_err,phi,calls_gxF,calls_gyF,calls_gyG,calls_hxy,calls_hyy";

/// Column names of kTraceHeader in order.
std::vector<std::string> trace_columns();

/// Header line plus one row per record. Reals use %.17g (exact round trip),
/// missing metrics are empty fields.
std::string format_trace(const Trace& trace);
void write_trace(const std::filesystem::path& path, const Trace& trace);

/// Inverse of format_trace. Throws std::runtime_error with the offending line
/// on a malformed header, field count or number.
Trace parse_trace(const std::string& text);
Trace read_trace(const std::filesystem::path& path);

/// Value of a named column for one record; std::invalid_argument for an
/// unknown column.
std::optional<double> trace_value(const TraceRecord& row, const std::string& column);

}  // namespace slipopt
