#pragma once

#include "ergmeter/report.hpp"

namespace ergmeter::report::detail {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

// Axis extent covering series points and point-like overlays; log axes snap
// outward to whole decades.
Range x_extent(const PlotSpec& plot);
Range y_extent(const PlotSpec& plot);

}  // namespace ergmeter::report::detail
