#include "lanegraph/synthgen.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace lanegraph::synth {

namespace {

constexpr double kSampleStep = 0.5;
constexpr double kPi = 3.14159265358979323846;

Polyline sample_line(Point2 start, Point2 dir, double length) {
  Polyline p;
  int n = std::max(1, static_cast<int>(std::ceil(length / kSampleStep)));
  double step = length / n;
  p.pts.reserve(n + 1);
  for (int i = 0; i <= n; ++i) p.pts.push_back(start + dir * (step * i));
  return p;
}

// Arc from angle a0 to a1 around c; the sign of (a1 - a0) sets the travel
// direction. Sampled so chord spacing is ~kSampleStep.
Polyline sample_arc(Point2 c, double radius, double a0, double a1) {
  Polyline p;
  double arc_len = std::abs(a1 - a0) * radius;
  int n = std::max(2, static_cast<int>(std::ceil(arc_len / kSampleStep)));
  p.pts.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    double a = a0 + (a1 - a0) * (static_cast<double>(i) / n);
    p.pts.push_back({c.x + radius * std::cos(a), c.y + radius * std::sin(a)});
  }
  return p;
}

Polyline boundary_of(Polyline p) {
  p.kind = PolylineKind::Boundary;
  return p;
}

void translate_all(Scenario& s, Point2 t) {
  auto shift = [&](Polyline& p) {
    for (auto& q : p.pts) q = q + t;
  };
  for (auto& l : s.lanes) shift(l.center);
  for (auto& b : s.boundaries) shift(b);
  for (auto& p : s.paths) shift(p);
  for (auto& g : s.ghosts) shift(g);
}

}  // namespace

Scenario make_straight_highway(double width, double length, int k_lanes) {
  assert(k_lanes >= 1);
  Scenario s;
  s.name = "straight";
  s.odd = "highway";
  s.width = width;
  Point2 start{-length / 2.0, 0.0};
  for (int i = 0; i < k_lanes; ++i) {
    double y = ((k_lanes - 1) / 2.0 - i) * width;
    GtLane lane;
    lane.center = sample_line({start.x, y}, {1.0, 0.0}, length);
    lane.width = width;
    s.lanes.push_back(std::move(lane));
    s.paths.push_back(s.lanes.back().center);
  }
  for (int j = 0; j <= k_lanes; ++j) {
    double y = ((k_lanes - 1) / 2.0 - j) * width + width / 2.0;
    s.boundaries.push_back(boundary_of(sample_line({start.x, y}, {1.0, 0.0}, length)));
  }
  return s;
}

Scenario make_curved_highway(double width, double length, double curvature, int k_lanes) {
  assert(curvature != 0.0 && k_lanes >= 1);
  Scenario s;
  s.name = "curved";
  s.odd = "highway";
  s.width = width;
  double r = 1.0 / std::abs(curvature);
  bool ccw = curvature > 0.0;
  // Base arc starts at the origin heading +x; the circle center sits at
  // (0, +r) for a left bend, (0, -r) for a right bend.
  Point2 c = ccw ? Point2{0.0, r} : Point2{0.0, -r};
  double dphi = length / r;
  auto lane_arc = [&](double offset) {
    // offset > 0 is left of travel
    double radius = ccw ? r - offset : r + offset;
    if (ccw) {
      double a0 = -kPi / 2.0;
      return sample_arc(c, radius, a0, a0 + dphi);
    }
    double a0 = kPi / 2.0;
    return sample_arc(c, radius, a0, a0 - dphi);
  };
  for (int i = 0; i < k_lanes; ++i) {
    double off = ((k_lanes - 1) / 2.0 - i) * width;
    GtLane lane;
    lane.center = lane_arc(off);
    lane.width = width;
    s.lanes.push_back(std::move(lane));
    s.paths.push_back(s.lanes.back().center);
  }
  for (int j = 0; j <= k_lanes; ++j) {
    double off = ((k_lanes - 1) / 2.0 - j) * width + width / 2.0;
    s.boundaries.push_back(boundary_of(lane_arc(off)));
  }
  // Center the layout on the tile.
  Point2 mid = point_at(s.lanes[0].center, polyline_length(s.lanes[0].center) / 2.0);
  Scenario out = std::move(s);
  translate_all(out, {-mid.x, -mid.y});
  return out;
}

namespace {
double ease_smooth(double t) { return t * t * (3.0 - 2.0 * t); }
}  // namespace

Scenario make_ramp(double width, double length, bool fork) {
  Scenario s;
  s.name = fork ? "ramp_fork" : "ramp_merge";
  s.odd = "highway";
  s.width = width;
  double x0 = -length / 2.0;
  double d_max = width + 0.6;

  GtLane main;
  main.center = sample_line({x0, 0.0}, {1.0, 0.0}, length);
  main.width = width;
  s.lanes.push_back(main);
  s.paths.push_back(main.center);
  s.boundaries.push_back(boundary_of(sample_line({x0, width / 2.0}, {1.0, 0.0}, length)));
  s.boundaries.push_back(boundary_of(sample_line({x0, -width / 2.0}, {1.0, 0.0}, length)));

  // Lateral offset of the ramp path below the main lane as a function of
  // longitudinal position s in [0, length].
  double s_a = fork ? 0.30 * length : 0.25 * length;  // easing span
  double s_b = fork ? 0.75 * length : 0.70 * length;
  auto offset_at = [&](double sv) {
    if (fork) {
      if (sv <= s_a) return 0.0;
      if (sv >= s_b) return d_max;
      return d_max * ease_smooth((sv - s_a) / (s_b - s_a));
    }
    if (sv <= s_a) return d_max;
    if (sv >= s_b) return 0.0;
    return d_max * (1.0 - ease_smooth((sv - s_a) / (s_b - s_a)));
  };

  Polyline ramp_path;
  int n = static_cast<int>(std::ceil(length / kSampleStep));
  for (int i = 0; i <= n; ++i) {
    double sv = length * (static_cast<double>(i) / n);
    ramp_path.pts.push_back({x0 + sv, -offset_at(sv)});
  }
  s.paths.push_back(ramp_path);

  // The ramp lane exists where the path has diverged (fork) or not yet
  // merged (merge) by at least 0.75 * width.
  double lane_thresh = 0.75 * width;
  GtLane branch;
  branch.width = width;
  double s_join = 0.0;
  if (fork) {
    for (const auto& p : ramp_path.pts)
      if (offset_at(p.x - x0) >= lane_thresh) branch.center.pts.push_back(p);
    s_join = branch.center.pts.front().x - x0;  // where traffic leaves the main lane
    s.lanes.push_back(branch);
    s.connections.push_back({0, s_join, 1, 0.0});
  } else {
    for (const auto& p : ramp_path.pts)
      if (offset_at(p.x - x0) >= lane_thresh) branch.center.pts.push_back(p);
    s_join = branch.center.pts.back().x - x0;  // where traffic enters the main lane
    s.lanes.push_back(branch);
    s.connections.push_back({1, polyline_length(branch.center), 0, s_join});
  }
  s.boundaries.push_back(boundary_of(offset_polyline(branch.center, width / 2.0)));
  s.boundaries.push_back(boundary_of(offset_polyline(branch.center, -width / 2.0)));
  return s;
}

Scenario make_rural(double width, double length, double curvature) {
  Scenario s = curvature == 0.0 ? make_straight_highway(width, length, 1)
                                : make_curved_highway(width, length, curvature, 1);
  // Rebuild as two opposite lanes around the single base lane.
  Polyline base = s.lanes[0].center;
  s = Scenario{};
  s.name = "rural";
  s.odd = "nonhighway";
  s.width = width;
  GtLane fwd;
  fwd.center = offset_polyline(base, -width / 2.0);
  fwd.width = width;
  GtLane rev;
  rev.center = offset_polyline(base, width / 2.0);
  std::reverse(rev.center.pts.begin(), rev.center.pts.end());
  rev.width = width;
  s.lanes.push_back(fwd);
  s.lanes.push_back(rev);
  s.paths.push_back(fwd.center);
  s.paths.push_back(rev.center);
  s.boundaries.push_back(boundary_of(offset_polyline(base, -width)));
  s.boundaries.push_back(boundary_of(base));
  s.boundaries.push_back(boundary_of(offset_polyline(base, width)));
  return s;
}

Scenario make_t_intersection(double width, double main_len, double side_len, double r_in,
                             double r_out) {
  Scenario s;
  s.name = "tintersection";
  s.odd = "nonhighway";
  s.width = width;
  double w = width;
  double xm = main_len / 2.0;
  double y_bot = -(side_len + w);

  // 0: eastbound main, 1: westbound main.
  GtLane east;
  east.center = sample_line({-xm, -w / 2.0}, {1.0, 0.0}, main_len);
  east.width = w;
  GtLane west;
  west.center = sample_line({xm, w / 2.0}, {-1.0, 0.0}, main_len);
  west.width = w;
  // 2: side road toward the junction, ends where the inbound turn begins.
  double y_in = -w / 2.0 - r_in;
  GtLane side_in;
  side_in.center = sample_line({w / 2.0, y_bot}, {0.0, 1.0}, y_in - y_bot);
  side_in.width = w;
  // 3: side road away from the junction, starts where the outbound turn ends.
  double y_out = -w / 2.0 - r_out;
  GtLane side_out;
  side_out.center = sample_line({-w / 2.0, y_out}, {0.0, -1.0}, y_out - y_bot);
  side_out.width = w;
  // 4: right turn side -> eastbound. Clockwise quarter arc.
  GtLane arc_in;
  arc_in.center = sample_arc({w / 2.0 + r_in, y_in}, r_in, kPi, kPi / 2.0);
  arc_in.width = w;
  // 5: right turn eastbound -> side. Clockwise quarter arc.
  GtLane arc_out;
  arc_out.center = sample_arc({-w / 2.0 - r_out, -w / 2.0 - r_out}, r_out, kPi / 2.0, 0.0);
  arc_out.width = w;

  s.lanes = {east, west, side_in, side_out, arc_in, arc_out};
  double len2 = polyline_length(side_in.center);
  double len4 = polyline_length(arc_in.center);
  double len5 = polyline_length(arc_out.center);
  double s_enter = xm + w / 2.0 + r_in;   // east lane s where the turn merges in
  double s_leave = xm - w / 2.0 - r_out;  // east lane s where the outbound turn begins
  s.connections.push_back({2, len2, 4, 0.0});
  s.connections.push_back({4, len4, 0, s_enter});
  s.connections.push_back({0, s_leave, 5, 0.0});
  s.connections.push_back({5, len5, 3, 0.0});

  // Markings: the main road's south edge and the side road's edge lines stop
  // where the turn arcs sweep through, leaving the junction mouths unmarked.
  s.boundaries.push_back(boundary_of(sample_line({-xm, w}, {1.0, 0.0}, main_len)));
  s.boundaries.push_back(boundary_of(sample_line({-xm, 0.0}, {1.0, 0.0}, main_len)));
  s.boundaries.push_back(
      boundary_of(sample_line({-xm, -w}, {1.0, 0.0}, xm - w / 2.0 - r_out)));
  s.boundaries.push_back(
      boundary_of(sample_line({w / 2.0 + r_in, -w}, {1.0, 0.0}, xm - w / 2.0 - r_in)));
  s.boundaries.push_back(boundary_of(sample_line({-w, y_bot}, {0.0, 1.0}, y_out - y_bot)));
  s.boundaries.push_back(boundary_of(sample_line({0.0, y_bot}, {0.0, 1.0}, -w - y_bot)));
  s.boundaries.push_back(boundary_of(sample_line({w, y_bot}, {0.0, 1.0}, y_in - y_bot)));

  // Paths: both mains through, side road in via the turn, main out via the
  // other turn.
  s.paths.push_back(east.center);
  s.paths.push_back(west.center);
  Polyline path_in = side_in.center;
  path_in.pts.insert(path_in.pts.end(), arc_in.center.pts.begin() + 1,
                     arc_in.center.pts.end());
  for (const auto& p : east.center.pts)
    if (p.x > w / 2.0 + r_in) path_in.pts.push_back(p);
  s.paths.push_back(path_in);
  Polyline path_out;
  for (const auto& p : east.center.pts)
    if (p.x < -w / 2.0 - r_out) path_out.pts.push_back(p);
  path_out.pts.insert(path_out.pts.end(), arc_out.center.pts.begin(),
                      arc_out.center.pts.end());
  path_out.pts.insert(path_out.pts.end(), side_out.center.pts.begin() + 1,
                      side_out.center.pts.end());
  s.paths.push_back(path_out);
  return s;
}

Scenario make_scenario(const GenConfig& cfg, Rng& rng) {
  double weights[5] = {cfg.w_straight, cfg.w_curved, cfg.w_ramp, cfg.w_rural, cfg.w_tint};
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) throw std::invalid_argument("gen: scenario weights sum to zero");
  double pick = rng.uniform() * total;
  int kind = 0;
  for (; kind < 4; ++kind) {
    if (pick < weights[kind]) break;
    pick -= weights[kind];
  }

  double width = rng.uniform(2.75, 3.75);
  double length = rng.uniform(50.0, 80.0);
  Scenario s;
  switch (kind) {
    case 0:
      s = make_straight_highway(width, length, rng.uniform() < 0.65 ? 2 : 3);
      break;
    case 1: {
      double mag = rng.uniform(1.0 / 400.0, 1.0 / 180.0);
      double curv = rng.bernoulli(0.5) ? mag : -mag;
      s = make_curved_highway(width, length, curv, rng.uniform() < 0.65 ? 2 : 3);
      break;
    }
    case 2:
      s = make_ramp(width, rng.uniform(55.0, 80.0), rng.bernoulli(0.5));
      break;
    case 3: {
      double curv = 0.0;
      if (!rng.bernoulli(cfg.rural_zero_curv_prob)) {
        double mag = rng.uniform(1.0 / 400.0, 1.0 / 200.0);
        curv = rng.bernoulli(0.5) ? mag : -mag;
      }
      s = make_rural(width, length, curv);
      break;
    }
    default:
      s = make_t_intersection(width, rng.uniform(55.0, 80.0), rng.uniform(25.0, 40.0),
                              rng.uniform(9.0, 12.0), rng.uniform(9.0, 12.0));
      break;
  }

  // Spurious markings, persistent per scenario so they survive aggregation.
  double bound_len = 0.0;
  for (const auto& b : s.boundaries) bound_len += polyline_length(b);
  int n_ghosts = rng.poisson(cfg.noise.fp_per_100m * bound_len / 100.0);
  for (int gi = 0; gi < n_ghosts; ++gi) {
    int parent = rng.uniform_int(0, static_cast<int>(s.boundaries.size()) - 1);
    double blen = polyline_length(s.boundaries[parent]);
    double glen = std::min(rng.uniform(8.0, 18.0), blen);
    double g0 = rng.uniform(0.0, blen - glen);
    double off = rng.uniform(0.55, 1.4) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
    Polyline ghost = offset_polyline(sub_polyline(s.boundaries[parent], g0, g0 + glen), off);
    ghost.kind = PolylineKind::Boundary;
    s.ghosts.push_back(std::move(ghost));
    s.ghost_parent.push_back(parent);
  }

  // Random pose on the tile.
  RigidTransform2 pose{rng.uniform(0.0, 2.0 * kPi), rng.uniform(-8.0, 8.0),
                       rng.uniform(-8.0, 8.0)};
  for (auto& l : s.lanes) l.center = apply_rigid(pose, l.center);
  for (auto& b : s.boundaries) b = apply_rigid(pose, b);
  for (auto& p : s.paths) p = apply_rigid(pose, p);
  for (auto& g : s.ghosts) g = apply_rigid(pose, g);
  return s;
}

void fill_gt_nodes(const Scenario& s, double spacing, std::vector<CenterPoint>& centers,
                   std::vector<LanePair>& pairs, std::vector<std::pair<int, int>>& edges) {
  centers.clear();
  pairs.clear();
  edges.clear();
  struct LaneNode {
    int index;
    double s;
  };
  std::vector<std::vector<LaneNode>> per_lane(s.lanes.size());
  for (size_t li = 0; li < s.lanes.size(); ++li) {
    const GtLane& lane = s.lanes[li];
    double len = polyline_length(lane.center);
    int prev = -1;
    for (double sv = 0.0; sv <= len + 1e-9; sv += spacing) {
      double sc = std::min(sv, len);
      CenterPoint cp;
      cp.pos = point_at(lane.center, sc);
      cp.dir = tangent_at(lane.center, sc);
      LanePair lp;
      lp.center = cp.pos;
      lp.left = cp.pos + cp.dir.perp() * (lane.width / 2.0);
      lp.right = cp.pos - cp.dir.perp() * (lane.width / 2.0);
      lp.matched = true;
      int idx = static_cast<int>(centers.size());
      centers.push_back(cp);
      pairs.push_back(lp);
      per_lane[li].push_back({idx, sc});
      if (prev >= 0) edges.push_back({prev, idx});
      prev = idx;
    }
  }
  for (const auto& c : s.connections) {
    const auto& from = per_lane[c.from_lane];
    const auto& to = per_lane[c.to_lane];
    int a = -1, b = -1;
    for (const auto& n : from)
      if (n.s <= c.s_from + 1e-6) a = n.index;
    for (size_t i = to.size(); i-- > 0;)
      if (to[i].s >= c.s_to - 1e-6) b = to[i].index;
    if (a >= 0 && b >= 0) edges.push_back({a, b});
  }
}

namespace {

// Contiguous stretch of a boundary observable from a path.
struct VisibleRun {
  int boundary;
  double s0, s1;
};

std::vector<VisibleRun> visible_runs(const Polyline& path,
                                     const std::vector<Polyline>& boundaries,
                                     double max_dist) {
  std::vector<VisibleRun> runs;
  std::vector<Polyline> path_vec{path};
  SegmentIndex index(path_vec, 4.0);
  for (size_t bi = 0; bi < boundaries.size(); ++bi) {
    const Polyline& b = boundaries[bi];
    double s_acc = 0.0;
    double run_start = -1.0, run_end = -1.0;
    for (size_t i = 0; i < b.pts.size(); ++i) {
      if (i > 0) s_acc += dist(b.pts[i - 1], b.pts[i]);
      auto hit = index.nearest(b.pts[i], max_dist);
      if (hit.found) {
        if (run_start < 0.0) run_start = s_acc;
        run_end = s_acc;
      } else if (run_start >= 0.0) {
        if (run_end - run_start >= 4.0)
          runs.push_back({static_cast<int>(bi), run_start, run_end});
        run_start = -1.0;
      }
    }
    if (run_start >= 0.0 && run_end - run_start >= 4.0)
      runs.push_back({static_cast<int>(bi), run_start, run_end});
  }
  return runs;
}

Polyline noisy_observation(const Polyline& piece, double sigma, Rng& rng) {
  Polyline out = resample_polyline(piece, 1.2);
  out.kind = PolylineKind::Boundary;
  for (auto& p : out.pts) {
    p.x += rng.normal(0.0, sigma);
    p.y += rng.normal(0.0, sigma);
  }
  return out;
}

}  // namespace

MinimapRecord gen_minimap(const GenConfig& cfg, const hex::TileId& tile, uint64_t seed) {
  Rng rng(seed);
  Scenario sc = make_scenario(cfg, rng);

  MinimapRecord rec;
  rec.tile = tile;
  rec.odd = sc.odd;
  rec.scenario = sc.name;
  rec.stage = "generated";
  rec.seed = seed;
  rec.gt.lanes = sc.lanes;
  rec.gt.connections = sc.connections;
  rec.gt.boundaries = sc.boundaries;

  fill_gt_nodes(sc, cfg.center_spacing, rec.centers, rec.gt_pairs, rec.gt_edges);

  const NoiseSpec& nz = cfg.noise;
  // Which boundary stretches each path can observe.
  std::vector<std::vector<VisibleRun>> runs_per_path;
  std::vector<std::vector<VisibleRun>> ghost_runs_per_path;
  for (const auto& path : sc.paths) {
    runs_per_path.push_back(visible_runs(path, sc.boundaries, 0.85 * sc.width));
    ghost_runs_per_path.push_back(visible_runs(path, sc.ghosts, 0.85 * sc.width + 1.5));
  }

  int drive_id = 0;
  for (size_t pi = 0; pi < sc.paths.size(); ++pi) {
    const Polyline& path = sc.paths[pi];
    int k = rng.uniform_int(nz.traces_min, nz.traces_max);
    for (int t = 0; t < k; ++t) {
      RigidTransform2 mis;
      if (nz.misalign_deg > 0.0 || nz.misalign_m > 0.0) {
        mis.theta = rng.uniform(-1.0, 1.0) * nz.misalign_deg * kPi / 180.0;
        double ang = rng.uniform(0.0, 2.0 * kPi);
        double mag = rng.uniform(0.0, nz.misalign_m);
        mis.tx = mag * std::cos(ang);
        mis.ty = mag * std::sin(ang);
      }
      rec.gt.drive_transforms.push_back(mis);

      // Trace: resampled path with lateral noise, chopped into short chunks.
      Polyline tr = resample_polyline(path, 5.0);
      if (nz.trace_sigma > 0.0) {
        double s_acc = 0.0;
        for (size_t i = 0; i < tr.pts.size(); ++i) {
          if (i > 0) s_acc += dist(tr.pts[i - 1], tr.pts[i]);
          Point2 n = tangent_at(path, s_acc).perp();
          tr.pts[i] = tr.pts[i] + n * rng.normal(0.0, nz.trace_sigma);
        }
      }
      size_t pos = 0;
      while (pos + 1 < tr.pts.size()) {
        size_t take = static_cast<size_t>(rng.uniform_int(4, 7));
        size_t rem = tr.pts.size() - pos;
        if (rem < take + 2) take = rem;  // avoid a trailing fragment
        take = std::min(take, rem);
        Polyline chunk;
        chunk.kind = PolylineKind::Trace;
        chunk.drive = drive_id;
        chunk.pts.assign(tr.pts.begin() + pos, tr.pts.begin() + pos + take);
        rec.polylines.push_back(apply_rigid(mis, chunk));
        if (pos + take >= tr.pts.size()) break;
        pos += take - 1;  // share one point between consecutive chunks
      }

      // Boundary observations along visible runs.
      for (const auto& run : runs_per_path[pi]) {
        double pos_s = run.s0;
        while (run.s1 - pos_s >= 4.0) {
          double len = std::min(rng.uniform(10.0, 20.0), run.s1 - pos_s);
          // A remainder too short to stand alone joins this piece, so pieces
          // always cover the run end to end.
          if (run.s1 - (pos_s + len) < 4.0) len = run.s1 - pos_s;
          bool keep = !rng.bernoulli(nz.dropout);
          if (keep) {
            Polyline piece = sub_polyline(sc.boundaries[run.boundary], pos_s, pos_s + len);
            Polyline obs = noisy_observation(piece, nz.boundary_sigma, rng);
            obs.drive = drive_id;
            rec.polylines.push_back(apply_rigid(mis, obs));
          }
          pos_s += len;
        }
      }
      // Spurious markings are observed like real ones.
      for (const auto& run : ghost_runs_per_path[pi]) {
        if (rng.bernoulli(nz.dropout)) continue;
        Polyline piece = sub_polyline(sc.ghosts[run.boundary], run.s0, run.s1);
        Polyline obs = noisy_observation(piece, nz.boundary_sigma, rng);
        obs.drive = drive_id;
        rec.polylines.push_back(apply_rigid(mis, obs));
      }
      ++drive_id;
    }
  }
  return rec;
}

std::vector<MinimapRecord> gen_dataset(const GenConfig& cfg) {
  std::vector<MinimapRecord> out;
  out.reserve(cfg.n_minimaps);
  for (int i = 0; i < cfg.n_minimaps; ++i)
    out.push_back(gen_minimap(cfg, hex::spiral(i), Rng::derive(cfg.seed, i)));
  return out;
}

}  // namespace lanegraph::synth
