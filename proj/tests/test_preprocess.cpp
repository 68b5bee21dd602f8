#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "lanegraph/preprocess.hpp"
#include "lanegraph/rng.hpp"
#include "lanegraph/synthgen.hpp"

using namespace lanegraph;
using namespace lanegraph::prep;

namespace {

constexpr double kPi = 3.14159265358979323846;

Polyline line_between(Point2 a, Point2 b, double step, PolylineKind kind) {
  Polyline p;
  p.pts = {a, b};
  p.kind = kind;
  return resample_polyline(p, step);
}

std::vector<Point2> points_of(const std::vector<Polyline>& ls) {
  std::vector<Point2> pts;
  for (const auto& l : ls)
    for (const auto& p : l.pts) pts.push_back(p);
  return pts;
}

double dist_to_lines(const Point2& q, const std::vector<Polyline>& lines) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& l : lines) best = std::min(best, project_to_polyline(q, l).dist2);
  return std::sqrt(best);
}

// Reference cross for one minimal scene: two perpendicular lines pin both the
// rotation and the translation of a registration.
std::vector<Polyline> cross_scene() {
  return {line_between({-20.0, 0.0}, {20.0, 0.0}, 1.0, PolylineKind::Boundary),
          line_between({0.0, -20.0}, {0.0, 20.0}, 1.0, PolylineKind::Boundary)};
}

}  // namespace

TEST_CASE("icp recovers an injected rigid offset to machine precision") {
  std::vector<Polyline> ref = cross_scene();
  PreprocessConfig cfg;
  cfg.icp_tol = 1e-12;  // let noiseless runs converge all the way down
  Rng rng(3);
  for (int trial = 0; trial < 8; ++trial) {
    RigidTransform2 mis{rng.uniform(-1.0, 1.0) * kPi / 180.0, rng.uniform(-1.0, 1.0),
                        rng.uniform(-1.0, 1.0)};
    std::vector<Point2> src = apply_rigid(mis, points_of(ref));
    IcpResult res = icp_align(src, ref, cfg);
    CHECK(res.converged);
    CHECK(res.iterations >= 1);
    REQUIRE(!res.residuals.empty());
    for (size_t i = 1; i < res.residuals.size(); ++i)
      CHECK(res.residuals[i] <= res.residuals[i - 1] + 1e-12);
    CHECK(res.residuals.back() < 1e-7);
    // est must invert the misalignment: est(mis(p)) == p.
    RigidTransform2 round = res.transform.compose(mis);
    for (const Point2& p : points_of(ref)) CHECK(dist(round.apply(p), p) < 1e-6);
  }
}

TEST_CASE("icp residuals stay monotone under observation noise") {
  std::vector<Polyline> ref = cross_scene();
  PreprocessConfig cfg;
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    RigidTransform2 mis{rng.uniform(-0.015, 0.015), rng.uniform(-0.8, 0.8),
                        rng.uniform(-0.8, 0.8)};
    std::vector<Point2> src = apply_rigid(mis, points_of(ref));
    for (auto& p : src) {
      p.x += rng.normal(0.0, 0.1);
      p.y += rng.normal(0.0, 0.1);
    }
    IcpResult res = icp_align(src, ref, cfg);
    REQUIRE(!res.residuals.empty());
    for (size_t i = 1; i < res.residuals.size(); ++i)
      CHECK(res.residuals[i] <= res.residuals[i - 1] + 1e-12);
    CHECK(res.converged);
  }
}

TEST_CASE("drive alignment brings misaligned drives into one frame") {
  PreprocessConfig cfg;
  cfg.icp_tol = 1e-12;
  std::vector<Polyline> ref = cross_scene();
  Rng rng(5);
  int n_drives = 3;
  std::vector<RigidTransform2> truth;
  std::vector<Polyline> observed;
  for (int d = 0; d < n_drives; ++d) {
    RigidTransform2 mis{rng.uniform(-1.0, 1.0) * kPi / 180.0, rng.uniform(-1.0, 1.0),
                        rng.uniform(-1.0, 1.0)};
    truth.push_back(mis);
    for (const auto& l : ref) {
      Polyline q = apply_rigid(mis, l);
      q.drive = d;
      observed.push_back(std::move(q));
    }
  }
  std::vector<RigidTransform2> est = align_drives(observed, n_drives + 2, cfg);
  REQUIRE(est.size() == static_cast<size_t>(n_drives) + 2);

  // Drives with no data keep the identity.
  for (int d = n_drives; d < n_drives + 2; ++d) {
    CHECK(est[d].theta == 0.0);
    CHECK(est[d].tx == 0.0);
    CHECK(est[d].ty == 0.0);
  }

  // The common frame is defined up to one global transform, so compare the
  // composed maps pairwise on a probe grid.
  std::vector<Point2> probes;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) probes.push_back({8.0 * i, 8.0 * j});
  for (int a = 0; a < n_drives; ++a) {
    RigidTransform2 ca = est[a].compose(truth[a]);
    for (int b = a + 1; b < n_drives; ++b) {
      RigidTransform2 cb = est[b].compose(truth[b]);
      for (const Point2& p : probes) CHECK(dist(ca.apply(p), cb.apply(p)) < 1e-6);
    }
  }
}

TEST_CASE("repeated marking observations collapse onto one polyline") {
  PreprocessConfig cfg;
  Polyline mark = line_between({0.0, 0.0}, {20.0, 0.0}, 1.0, PolylineKind::Boundary);
  std::vector<Polyline> reps = aggregate_boundaries({mark, mark}, cfg);
  REQUIRE(reps.size() == 1);
  CHECK(reps[0].kind == PolylineKind::Boundary);
  for (const auto& p : reps[0].pts) CHECK(std::abs(p.y) < 1e-9);
  double len = polyline_length(reps[0]);
  CHECK(len > 18.0);
  CHECK(len <= 20.0 + 1e-9);

  // A single pass has no support and is discarded as potential noise.
  CHECK(aggregate_boundaries({mark}, cfg).empty());
}

TEST_CASE("parallel duplicate markings merge onto their density ridge") {
  PreprocessConfig cfg;
  Polyline a = line_between({0.0, 0.0}, {20.0, 0.0}, 1.0, PolylineKind::Boundary);
  Polyline b = line_between({0.0, 0.2}, {20.0, 0.2}, 1.0, PolylineKind::Boundary);
  std::vector<Polyline> reps = aggregate_boundaries({a, b}, cfg);
  REQUIRE(reps.size() == 1);
  for (const auto& p : reps[0].pts) CHECK(p.y == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("trace bundling yields one oriented representative per corridor") {
  PreprocessConfig cfg;
  Polyline fwd = line_between({0.0, 0.0}, {30.0, 0.0}, 1.0, PolylineKind::Trace);
  std::vector<Polyline> reps = bundle_traces({fwd, fwd}, cfg);
  REQUIRE(reps.size() == 1);
  CHECK(reps[0].kind == PolylineKind::Trace);
  CHECK(reps[0].pts.front().x < reps[0].pts.back().x);  // oriented with travel
  CHECK(polyline_length(reps[0]) > 25.0);

  Polyline rev = fwd;
  std::reverse(rev.pts.begin(), rev.pts.end());
  std::vector<Polyline> back = bundle_traces({rev, rev}, cfg);
  REQUIRE(back.size() == 1);
  CHECK(back[0].pts.front().x > back[0].pts.back().x);

  // Corridors shorter than rep_min_len are debris.
  Polyline stub = line_between({0.0, 0.0}, {8.0, 0.0}, 1.0, PolylineKind::Trace);
  CHECK(bundle_traces({stub, stub}, cfg).empty());
}

TEST_CASE("center points sample representatives with smoothed directions") {
  Polyline rep = line_between({0.0, 0.0}, {30.0, 0.0}, 1.0, PolylineKind::Trace);
  std::vector<CenterPoint> centers = derive_center_points({rep}, 10.0);
  REQUIRE(centers.size() == 4);
  for (size_t i = 0; i < centers.size(); ++i) {
    CHECK(centers[i].pos.x == doctest::Approx(10.0 * i).epsilon(1e-12));
    CHECK(centers[i].pos.y == 0.0);
    CHECK(centers[i].dir.x == doctest::Approx(1.0));
    CHECK(centers[i].dir.y == doctest::Approx(0.0));
  }

  Polyline dot;
  dot.pts = {{1.0, 1.0}};
  CHECK(derive_center_points({dot}, 10.0).empty());
}

TEST_CASE("lane pair matching finds the closest marking on each side") {
  std::vector<Polyline> bounds = {
      line_between({-5.0, 2.0}, {5.0, 2.0}, 1.0, PolylineKind::Boundary),
      line_between({-5.0, -1.5}, {5.0, -1.5}, 1.0, PolylineKind::Boundary)};
  CenterPoint c{{0.0, 0.0}, {1.0, 0.0}};
  std::vector<LanePair> got = match_gt_lane_pairs({c}, bounds, 5.0);
  REQUIRE(got.size() == 1);
  CHECK(got[0].matched);
  CHECK(dist(got[0].left, {0.0, 2.0}) < 1e-12);
  CHECK(dist(got[0].right, {0.0, -1.5}) < 1e-12);
  CHECK(lane_width(got[0]) == doctest::Approx(3.5).epsilon(1e-12));

  // One side missing -> unmatched, degenerate points.
  got = match_gt_lane_pairs({c}, {bounds[0]}, 5.0);
  CHECK(!got[0].matched);
  CHECK(dist(got[0].left, c.pos) == 0.0);
  CHECK(dist(got[0].right, c.pos) == 0.0);

  // The match gate is inclusive.
  std::vector<Polyline> at_gate = {
      line_between({-5.0, 5.0}, {5.0, 5.0}, 1.0, PolylineKind::Boundary),
      line_between({-5.0, -5.0}, {5.0, -5.0}, 1.0, PolylineKind::Boundary)};
  CHECK(match_gt_lane_pairs({c}, at_gate, 5.0)[0].matched);
  std::vector<Polyline> past_gate = {
      line_between({-5.0, 5.0 + 1e-6}, {5.0, 5.0 + 1e-6}, 1.0, PolylineKind::Boundary),
      line_between({-5.0, -5.0}, {5.0, -5.0}, 1.0, PolylineKind::Boundary)};
  CHECK(!match_gt_lane_pairs({c}, past_gate, 5.0)[0].matched);
}

TEST_CASE("lane pair matching is optimal against dense sampling") {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Polyline> bounds;
    for (int b = 0; b < 3; ++b) {
      Polyline p;
      p.kind = PolylineKind::Boundary;
      int n = rng.uniform_int(2, 5);
      for (int i = 0; i < n; ++i) p.pts.push_back({rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0)});
      bounds.push_back(std::move(p));
    }
    CenterPoint c;
    c.pos = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    double ang = rng.uniform(0.0, 2.0 * kPi);
    c.dir = {std::cos(ang), std::sin(ang)};
    double radius = 5.0;
    LanePair lp = match_gt_lane_pairs({c}, bounds, radius)[0];

    double best_side[2] = {std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity()};
    for (const auto& b : bounds) {
      for (size_t i = 0; i + 1 < b.pts.size(); ++i) {
        for (int k = 0; k <= 2000; ++k) {
          Point2 p = b.pts[i] + (b.pts[i + 1] - b.pts[i]) * (k / 2000.0);
          double cr = c.dir.cross(p - c.pos);
          double d = dist(p, c.pos);
          if (cr > 1e-9) best_side[0] = std::min(best_side[0], d);
          if (cr < -1e-9) best_side[1] = std::min(best_side[1], d);
        }
      }
    }
    if (lp.matched) {
      // Returned points sit on the markings, on their claimed side, and are
      // no worse than any sampled candidate on that side.
      CHECK(dist_to_lines(lp.left, bounds) < 1e-9);
      CHECK(dist_to_lines(lp.right, bounds) < 1e-9);
      CHECK(c.dir.cross(lp.left - c.pos) >= -1e-12);
      CHECK(c.dir.cross(lp.right - c.pos) <= 1e-12);
      CHECK(dist(lp.left, c.pos) <= best_side[0] + 1e-9);
      CHECK(dist(lp.right, c.pos) <= best_side[1] + 1e-9);
      CHECK(dist(lp.left, c.pos) <= radius + 1e-12);
      CHECK(dist(lp.right, c.pos) <= radius + 1e-12);
    } else {
      // No sampled point strictly inside either missing side beats the gate.
      bool left_open = best_side[0] > radius - 1e-6;
      bool right_open = best_side[1] > radius - 1e-6;
      CHECK((left_open || right_open));
    }
  }
}

TEST_CASE("successor labels chain centers along lanes and across connections") {
  PreprocessConfig cfg;
  GtInfo gt;
  GtLane main;
  main.center = line_between({0.0, 0.0}, {40.0, 0.0}, 0.5, PolylineKind::Trace);
  GtLane side;
  side.center = line_between({40.0, 2.0}, {40.0, 32.0}, 0.5, PolylineKind::Trace);
  gt.lanes = {main, side};
  gt.connections.push_back({0, 40.0, 1, 0.0});

  std::vector<CenterPoint> centers;
  for (int i = 0; i <= 4; ++i) centers.push_back({{10.0 * i, 0.0}, {1.0, 0.0}});
  for (int i = 0; i < 3; ++i) centers.push_back({{40.0, 2.0 + 10.0 * i}, {0.0, 1.0}});
  centers.push_back({{20.0, 10.0}, {1.0, 0.0}});  // off every lane, stays isolated

  std::vector<std::pair<int, int>> edges = derive_adjacency(centers, gt, cfg);
  std::vector<std::pair<int, int>> want = {{0, 1}, {1, 2}, {2, 3}, {3, 4},
                                           {4, 5}, {5, 6}, {6, 7}};
  CHECK(edges == want);

  // A long gap breaks the chain.
  std::vector<CenterPoint> sparse = {centers[0], centers[4]};
  CHECK(derive_adjacency(sparse, gt, cfg).empty());

  // The handover needs a source node near enough to the connection point.
  std::vector<CenterPoint> far = {centers[0], centers[5], centers[6]};
  std::vector<std::pair<int, int>> got = derive_adjacency(far, gt, cfg);
  std::vector<std::pair<int, int>> chain_only = {{1, 2}};
  CHECK(got == chain_only);
}

TEST_CASE("zero noise preprocessing recovers truth centers and widths") {
  synth::GenConfig gen;
  gen.noise.trace_sigma = 0.0;
  gen.noise.boundary_sigma = 0.0;
  gen.noise.dropout = 0.0;
  gen.noise.fp_per_100m = 0.0;
  gen.noise.misalign_deg = 0.0;
  gen.noise.misalign_m = 0.0;
  gen.noise.traces_min = 2;
  gen.noise.traces_max = 2;
  gen.w_curved = 0.0;
  gen.w_ramp = 0.0;
  gen.w_rural = 0.0;
  gen.w_tint = 0.0;
  gen.rural_zero_curv_prob = 1.0;
  PreprocessConfig cfg;

  for (uint64_t seed : {11, 12}) {
    MinimapRecord rec = synth::gen_minimap(gen, {0, 0}, seed);
    MinimapRecord out = preprocess_minimap(rec, cfg);
    CHECK(out.stage == "preprocessed");
    CHECK(out.centers.size() >= rec.gt.lanes.size());
    REQUIRE(out.gt_pairs.size() == out.centers.size());

    std::vector<Polyline> lane_centers;
    for (const auto& l : rec.gt.lanes) lane_centers.push_back(l.center);
    int matched = 0;
    for (size_t i = 0; i < out.centers.size(); ++i) {
      CHECK(dist_to_lines(out.centers[i].pos, lane_centers) < 1e-6);
      if (!out.gt_pairs[i].matched) continue;
      ++matched;
      double want = rec.gt.lanes[0].width;
      CHECK(lane_width(out.gt_pairs[i]) == doctest::Approx(want).epsilon(1e-6));
    }
    CHECK(matched > 0);
    CHECK(matched == static_cast<int>(out.centers.size()));

    for (const auto& p : out.polylines) {
      CHECK(p.pts.size() >= 2);
      size_t cap = p.kind == PolylineKind::Trace ? 5 : 10;
      CHECK(p.pts.size() <= cap + 1);
    }
  }
}

TEST_CASE("preprocessing commutes with a rigid transform of its inputs") {
  synth::GenConfig gen;
  gen.noise.traces_min = 3;
  gen.noise.traces_max = 3;
  gen.w_ramp = 0.0;
  gen.w_tint = 0.0;
  PreprocessConfig cfg;
  MinimapRecord rec = synth::gen_minimap(gen, {0, 0}, 21);

  RigidTransform2 T{0.7, 4.0, -3.0};
  MinimapRecord moved = rec;
  for (auto& p : moved.polylines) p = apply_rigid(T, p);
  for (auto& l : moved.gt.lanes) l.center = apply_rigid(T, l.center);
  for (auto& b : moved.gt.boundaries) b = apply_rigid(T, b);

  MinimapRecord a = preprocess_minimap(rec, cfg);
  MinimapRecord b = preprocess_minimap(moved, cfg);

  RigidTransform2 rot{T.theta, 0.0, 0.0};
  REQUIRE(a.centers.size() == b.centers.size());
  for (size_t i = 0; i < a.centers.size(); ++i) {
    CHECK(dist(T.apply(a.centers[i].pos), b.centers[i].pos) < 1e-6);
    CHECK(dist(rot.apply(a.centers[i].dir), b.centers[i].dir) < 1e-6);
  }
  REQUIRE(a.gt_pairs.size() == b.gt_pairs.size());
  for (size_t i = 0; i < a.gt_pairs.size(); ++i) {
    CHECK(a.gt_pairs[i].matched == b.gt_pairs[i].matched);
    if (!a.gt_pairs[i].matched) continue;
    CHECK(dist(T.apply(a.gt_pairs[i].left), b.gt_pairs[i].left) < 1e-6);
    CHECK(dist(T.apply(a.gt_pairs[i].right), b.gt_pairs[i].right) < 1e-6);
  }
  CHECK(a.gt_edges == b.gt_edges);
}
