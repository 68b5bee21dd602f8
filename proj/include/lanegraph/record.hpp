#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lanegraph/geometry.hpp"
#include "lanegraph/hex.hpp"

namespace lanegraph {

inline constexpr int kSchemaVersion = 1;

// Ground-truth lane description kept alongside each minimap so later stages
// can label derived data and plots can overlay the truth.
struct GtLane {
  Polyline center;  // sampled centerline in tile-local coordinates
  double width = 3.2;
};

// Directed handover between lanes: leaving `from_lane` at arc length s_from
// continues on `to_lane` at arc length s_to.
struct LaneConnection {
  int from_lane = 0;
  double s_from = 0.0;
  int to_lane = 0;
  double s_to = 0.0;
};

struct GtInfo {
  std::vector<GtLane> lanes;
  std::vector<LaneConnection> connections;
  std::vector<Polyline> boundaries;  // true marking polylines (gaps where unmarked)
  std::vector<RigidTransform2> drive_transforms;  // true per-drive misalignment
};

// One minimap: everything the pipeline knows about a single hex tile, in
// tile-local coordinates. The `stage` tag records how far the record has been
// processed; preprocessing replaces centers/pairs/edges with derived values.
struct MinimapRecord {
  int schema_version = kSchemaVersion;
  hex::TileId tile;
  std::string odd;       // "highway" | "nonhighway"
  std::string scenario;  // generator scenario name
  std::string stage;     // "generated" | "preprocessed"
  uint64_t seed = 0;
  std::vector<Polyline> polylines;
  std::vector<CenterPoint> centers;
  std::vector<LanePair> gt_pairs;                // aligned with centers
  std::vector<std::pair<int, int>> gt_edges;     // directed adjacency edge list
  GtInfo gt;
};

namespace io {

std::string record_to_json(const MinimapRecord& r);
MinimapRecord record_from_json(const std::string& text);

// JSON-lines files; loading reports the offending 1-based line on parse or
// validation failure, and names both versions on a schema mismatch.
void save_records(const std::string& path, const std::vector<MinimapRecord>& recs);
std::vector<MinimapRecord> load_records(const std::string& path);

}  // namespace io

// Dense row-major n*n adjacency built from the edge list.
std::vector<uint8_t> edges_to_adjacency(const std::vector<std::pair<int, int>>& edges, int n);

}  // namespace lanegraph
