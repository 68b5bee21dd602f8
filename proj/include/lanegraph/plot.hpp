#pragma once

#include <string>

#include "lanegraph/record.hpp"

namespace lanegraph::plot {

struct PlotOptions {
  double scale = 6.0;    // pixels per meter
  double margin = 12.0;  // meters of padding around the content
  bool draw_gt = true;   // ground-truth boundaries and labels
};

// Deterministic SVG: observations underneath, labels and the optional
// predicted graph on top. Byte-identical output for identical inputs.
std::string render_svg(const MinimapRecord& rec, const LaneGraph* pred,
                       const PlotOptions& opt);

}  // namespace lanegraph::plot
