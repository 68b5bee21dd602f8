#include "lanegraph/baselines.hpp"

#include <cmath>
#include <limits>

namespace lanegraph::baseline {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<Point2> marking_points(const std::vector<Polyline>& polylines, double step) {
  std::vector<Point2> pts;
  for (const auto& p : polylines) {
    if (p.kind != PolylineKind::Boundary || p.size() < 2) continue;
    Polyline r = resample_polyline(p, step);
    pts.insert(pts.end(), r.pts.begin(), r.pts.end());
  }
  return pts;
}

}  // namespace

std::vector<LanePair> fixed_offset_pairs(const std::vector<CenterPoint>& centers,
                                         const BaselineConfig& cfg) {
  std::vector<LanePair> pairs;
  pairs.reserve(centers.size());
  for (const auto& c : centers) {
    Point2 n = c.dir.perp();
    LanePair lp;
    lp.center = c.pos;
    lp.left = c.pos + n * cfg.half_width;
    lp.right = c.pos - n * cfg.half_width;
    lp.matched = true;
    pairs.push_back(lp);
  }
  return pairs;
}

std::vector<LanePair> nearest_point_pairs(const std::vector<CenterPoint>& centers,
                                          const std::vector<Polyline>& polylines,
                                          const BaselineConfig& cfg) {
  std::vector<Point2> pts = marking_points(polylines, cfg.obs_step);
  double r2 = cfg.match_radius * cfg.match_radius;
  std::vector<LanePair> pairs;
  pairs.reserve(centers.size());
  for (const auto& c : centers) {
    double best2[2] = {std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity()};
    Point2 bestp[2];
    for (const auto& p : pts) {
      double side = c.dir.cross(p - c.pos);
      if (side == 0.0) continue;
      int s = side > 0.0 ? 0 : 1;
      double d2 = (p - c.pos).norm2();
      if (d2 < best2[s]) {
        best2[s] = d2;
        bestp[s] = p;
      }
    }
    Point2 n = c.dir.perp();
    LanePair lp;
    lp.center = c.pos;
    lp.left = best2[0] <= r2 ? bestp[0] : c.pos + n * cfg.half_width;
    lp.right = best2[1] <= r2 ? bestp[1] : c.pos - n * cfg.half_width;
    lp.matched = true;
    pairs.push_back(lp);
  }
  return pairs;
}

std::vector<LanePair> perp_intersect_pairs(const std::vector<CenterPoint>& centers,
                                           const std::vector<Polyline>& polylines,
                                           const BaselineConfig& cfg) {
  std::vector<LanePair> pairs;
  pairs.reserve(centers.size());
  for (const auto& c : centers) {
    Point2 n = c.dir.perp();
    double best[2] = {std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity()};  // |t| per side
    for (const auto& poly : polylines) {
      if (poly.kind != PolylineKind::Boundary) continue;
      for (size_t i = 0; i + 1 < poly.size(); ++i) {
        Point2 a0 = poly.pts[i];
        Point2 ab = poly.pts[i + 1] - a0;
        double denom = n.cross(ab);
        if (std::abs(denom) < 1e-12) continue;
        Point2 w = a0 - c.pos;
        double t = w.cross(ab) / denom;  // along the perpendicular, + is left
        double u = w.cross(n) / denom;   // along the segment
        if (u < -1e-9 || u > 1.0 + 1e-9) continue;
        if (t == 0.0) continue;
        int s = t > 0.0 ? 0 : 1;
        double a = std::abs(t);
        if (a < best[s]) best[s] = a;
      }
    }
    LanePair lp;
    lp.center = c.pos;
    lp.left = best[0] <= cfg.match_radius ? c.pos + n * best[0] : c.pos + n * cfg.half_width;
    lp.right = best[1] <= cfg.match_radius ? c.pos - n * best[1] : c.pos - n * cfg.half_width;
    lp.matched = true;
    pairs.push_back(lp);
  }
  return pairs;
}

std::vector<uint8_t> forward_adjacency(const std::vector<LanePair>& pairs,
                                       const BaselineConfig& cfg) {
  size_t n = pairs.size();
  std::vector<uint8_t> adj(n * n, 0);
  double cos_gate = std::cos(cfg.conn_angle_deg * kPi / 180.0);
  for (size_t i = 0; i < n; ++i) {
    Point2 lr = pairs[i].left - pairs[i].right;
    Point2 fwd = Point2{lr.y, -lr.x}.normalized();  // travel direction
    if (fwd.norm2() == 0.0) continue;
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      Point2 v = pairs[j].center - pairs[i].center;
      double d = v.norm();
      if (d < 1e-9 || d > cfg.conn_range) continue;
      if (fwd.dot(v) < cos_gate * d) continue;
      if (d < bd) {
        bd = d;
        best = static_cast<int>(j);
      }
    }
    if (best >= 0) adj[i * n + best] = 1;
  }
  return adj;
}

}  // namespace lanegraph::baseline
