#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lanegraph/record.hpp"
#include "lanegraph/rng.hpp"

namespace lanegraph::synth {

struct NoiseSpec {
  double trace_sigma = 0.25;     // lateral trace noise, meters
  double boundary_sigma = 0.15;  // isotropic observation point noise
  double dropout = 0.2;          // per observation segment
  double fp_per_100m = 0.5;      // spurious marking rate per 100 m of boundary
  double misalign_deg = 1.0;     // max per-drive rotation
  double misalign_m = 1.0;       // max per-drive translation magnitude
  int traces_min = 5;            // drives per driving path, inclusive range
  int traces_max = 10;
};

struct GenConfig {
  int n_minimaps = 100;
  double center_spacing = 10.0;
  NoiseSpec noise;
  // Scenario mix, normalized internally. Defaults give a 2:1 highway to
  // non-highway split.
  double w_straight = 0.27;
  double w_curved = 0.22;
  double w_ramp = 0.177;
  double w_rural = 0.20;
  double w_tint = 0.133;
  double rural_zero_curv_prob = 0.4;
  uint64_t seed = 1;
};

// A road layout in tile-local coordinates, before any observation.
struct Scenario {
  std::string name;
  std::string odd;  // "highway" | "nonhighway"
  double width = 3.2;
  std::vector<GtLane> lanes;
  std::vector<LaneConnection> connections;
  std::vector<Polyline> boundaries;  // marking polylines, gaps where unmarked
  std::vector<Polyline> paths;       // continuous driving centerlines
  std::vector<Polyline> ghosts;      // spurious marking stretches
  std::vector<int> ghost_parent;     // boundary shadowed by each ghost
};

Scenario make_straight_highway(double width, double length, int k_lanes);
Scenario make_curved_highway(double width, double length, double curvature, int k_lanes);
Scenario make_ramp(double width, double length, bool fork);
Scenario make_rural(double width, double length, double curvature);
Scenario make_t_intersection(double width, double main_len, double side_len, double r_in,
                             double r_out);

// Random scenario per the config mix, rotated and jittered about the origin.
Scenario make_scenario(const GenConfig& cfg, Rng& rng);

// Ground-truth nodes every `spacing` meters along each lane, exact boundary
// offsets, chain edges within lanes and connection edges across them.
void fill_gt_nodes(const Scenario& s, double spacing, std::vector<CenterPoint>& centers,
                   std::vector<LanePair>& pairs, std::vector<std::pair<int, int>>& edges);

MinimapRecord gen_minimap(const GenConfig& cfg, const hex::TileId& tile, uint64_t seed);
std::vector<MinimapRecord> gen_dataset(const GenConfig& cfg);

}  // namespace lanegraph::synth
