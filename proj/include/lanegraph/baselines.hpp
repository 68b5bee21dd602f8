#pragma once

#include <cstdint>
#include <vector>

#include "lanegraph/geometry.hpp"

namespace lanegraph::baseline {

struct BaselineConfig {
  double half_width = 1.6;       // fixed lateral offset fallback
  double match_radius = 5.0;     // inclusive gate for observed markings
  double obs_step = 0.25;        // marking densification step
  double conn_angle_deg = 10.0;  // half angle of the forward successor cone
  double conn_range = 25.0;      // max successor distance
};

// Fixed-offset pairs: boundaries at +-half_width perpendicular to each
// center's direction. No observations consulted.
std::vector<LanePair> fixed_offset_pairs(const std::vector<CenterPoint>& centers,
                                         const BaselineConfig& cfg);

// Nearest observed marking point strictly on each side of the center
// direction; sides without a point inside match_radius fall back to the
// fixed offset.
std::vector<LanePair> nearest_point_pairs(const std::vector<CenterPoint>& centers,
                                          const std::vector<Polyline>& polylines,
                                          const BaselineConfig& cfg);

// Intersection of the center's perpendicular with observed marking segments,
// nearest crossing per side; sides without a crossing inside match_radius
// fall back to the fixed offset.
std::vector<LanePair> perp_intersect_pairs(const std::vector<CenterPoint>& centers,
                                           const std::vector<Polyline>& polylines,
                                           const BaselineConfig& cfg);

// Successor adjacency from pair geometry alone: each pair links to the
// nearest pair inside its forward cone, at most one outgoing edge. Returns
// row-major n*n.
std::vector<uint8_t> forward_adjacency(const std::vector<LanePair>& pairs,
                                       const BaselineConfig& cfg);

}  // namespace lanegraph::baseline
