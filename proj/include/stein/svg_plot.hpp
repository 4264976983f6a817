#pragma once

#include <string>
#include <vector>

#include "stein/harness.hpp"

namespace stein {

/// Render KSD-vs-N results as a self-contained SVG: one median polyline per
/// method, per-seed scatter points, log-scaled KSD axis, legend and axis
/// labels. Output bytes are a pure function of the records. Records with a
/// non-"ok" status are ignored; no usable record raises ConfigError.
std::string render_ksd_plot(const std::vector<RunRecord>& records);

}  // namespace stein
