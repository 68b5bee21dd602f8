#pragma once

#include <utility>
#include <vector>

#include "lanegraph/record.hpp"

namespace lanegraph::prep {

struct PreprocessConfig {
  // drive alignment
  double icp_gate = 5.0;      // correspondence distance gate
  double icp_tol = 1e-6;      // minimum residual improvement to keep going
  int icp_max_iter = 50;
  double icp_resample = 2.0;  // source point spacing
  int align_rounds = 2;

  // density ridge extraction, shared by marking and trace aggregation
  int ridge_iters = 15;
  double ridge_angle_deg = 45.0;  // heading agreement for window membership
  double weld_radius = 0.5;       // thinning: points within this radius collapse
  int min_support = 2;            // raw points per weld cluster required to keep it
  double chain_gap = 2.0;         // max cell centroid spacing within a chain
  double chain_angle_deg = 60.0;  // max turn per chaining step
  int min_chain = 3;              // shorter chains are dropped

  // marking aggregation windows
  double agg_resample = 1.0;
  double agg_lateral = 0.5;  // half width of the averaging window
  double agg_forward = 2.0;  // longitudinal half extent

  // trace bundling windows
  double ridge_resample = 1.0;
  double ridge_lateral = 1.2;
  double ridge_forward = 4.0;
  double rep_min_len = 12.0;  // representatives shorter than this are debris

  // derived centers and labels
  double center_spacing = 10.0;
  double match_radius = 5.0;  // inclusive boundary match gate
  double label_radius = 2.0;  // center-to-lane assignment gate
  double succ_gap_factor = 2.5;   // same-lane successor gap, in spacings
  double conn_slack_factor = 0.5; // connection endpoint slack, in spacings

  // output record shaping
  int out_trace_pts = 5;      // points per emitted trace polyline
  int out_boundary_pts = 10;  // points per emitted boundary polyline
};

struct IcpResult {
  RigidTransform2 transform;
  std::vector<double> residuals;  // mean correspondence distance per accepted
                                  // iterate, never increasing
  int iterations = 0;
  bool converged = false;  // stopped because the step no longer improved
};

// Rigid registration of a point cloud onto reference polylines via iterated
// point-to-segment correspondences. Steps that fail to improve the residual
// by icp_tol are rejected, so the recorded residuals are monotone.
IcpResult icp_align(const std::vector<Point2>& src, const std::vector<Polyline>& ref,
                    const PreprocessConfig& cfg);

// Same registration for source polylines, resampled at icp_resample. Marking
// lines correspond only to marking lines and path-like lines only to
// path-like lines, which keeps the two interleaved line families from
// cross-capturing each other.
IcpResult icp_align(const std::vector<Polyline>& src, const std::vector<Polyline>& ref,
                    const PreprocessConfig& cfg);

// Leave-one-out round-robin registration over all drives. Returns one
// transform per drive id in [0, n_drives) mapping that drive into the common
// frame; drives without data keep the identity.
std::vector<RigidTransform2> align_drives(const std::vector<Polyline>& polylines,
                                          int n_drives, const PreprocessConfig& cfg);

// Boundary observations -> deduplicated marking polylines.
std::vector<Polyline> aggregate_boundaries(const std::vector<Polyline>& obs,
                                           const PreprocessConfig& cfg);

// Trace chunks -> one representative centerline per travelled lane corridor.
// Points are pulled laterally onto the local trace density ridge, thinned and
// chained; each output is oriented along the member travel direction.
std::vector<Polyline> bundle_traces(const std::vector<Polyline>& traces,
                                    const PreprocessConfig& cfg);

// Center points sampled every `spacing` along each representative, with
// central-difference directions.
std::vector<CenterPoint> derive_center_points(const std::vector<Polyline>& reps,
                                              double spacing);

// Closest boundary point strictly on each side of the center's direction,
// minimized exactly over segments. Centers lacking a side within `radius`
// (inclusive) come back with matched=false and degenerate points.
std::vector<LanePair> match_gt_lane_pairs(const std::vector<CenterPoint>& centers,
                                          const std::vector<Polyline>& boundaries,
                                          double radius);

// Successor labels for derived centers: consecutive centers along their
// assigned ground-truth lane, plus edges across lane connections.
std::vector<std::pair<int, int>> derive_adjacency(const std::vector<CenterPoint>& centers,
                                                  const GtInfo& gt,
                                                  const PreprocessConfig& cfg);

// Full pipeline for one minimap: align drives, aggregate markings, extract
// lane representatives, derive centers and labels. Ground truth is carried
// over untouched.
MinimapRecord preprocess_minimap(const MinimapRecord& rec, const PreprocessConfig& cfg);

}  // namespace lanegraph::prep
