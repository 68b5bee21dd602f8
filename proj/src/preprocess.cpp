#include "lanegraph/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <tuple>
#include <unordered_map>

namespace lanegraph::prep {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Uniform hash grid over points; queries return ascending indices so
// downstream decisions never depend on hash iteration order.
class PointGrid {
 public:
  PointGrid(const std::vector<Point2>& pts, double cell)
      : pts_(pts), cell_(std::max(cell, 1e-9)) {
    for (size_t i = 0; i < pts.size(); ++i)
      cells_[key_of(pts[i])].push_back(static_cast<int>(i));
  }

  void query(const Point2& q, double radius, std::vector<int>& out) const {
    out.clear();
    int x0 = coord(q.x - radius), x1 = coord(q.x + radius);
    int y0 = coord(q.y - radius), y1 = coord(q.y + radius);
    double r2 = radius * radius;
    for (int cx = x0; cx <= x1; ++cx) {
      for (int cy = y0; cy <= y1; ++cy) {
        auto it = cells_.find(pack(cx, cy));
        if (it == cells_.end()) continue;
        for (int i : it->second)
          if ((pts_[i] - q).norm2() <= r2) out.push_back(i);
      }
    }
    std::sort(out.begin(), out.end());
  }

 private:
  int coord(double v) const { return static_cast<int>(std::floor(v / cell_)); }
  static int64_t pack(int cx, int cy) {
    return (static_cast<int64_t>(cx) << 32) | static_cast<uint32_t>(cy);
  }
  int64_t key_of(const Point2& p) const { return pack(coord(p.x), coord(p.y)); }

  const std::vector<Point2>& pts_;
  double cell_;
  std::unordered_map<int64_t, std::vector<int>> cells_;
};

// Densify polylines and attach a unit travel direction to every vertex.
void collect_points(const std::vector<Polyline>& lines, double spacing,
                    std::vector<Point2>& pts, std::vector<Point2>& dirs) {
  for (const auto& line : lines) {
    if (line.size() < 2 || polyline_length(line) < 1e-9) continue;
    Polyline r = resample_polyline(line, spacing);
    for (size_t i = 0; i < r.size(); ++i) {
      Point2 d = i + 1 < r.size() ? (r.pts[i + 1] - r.pts[i]).normalized()
                                  : (r.pts[i] - r.pts[i - 1]).normalized();
      if (d.norm2() == 0.0) continue;
      pts.push_back(r.pts[i]);
      dirs.push_back(d);
    }
  }
}

// Pull each point laterally onto the mean of direction-compatible neighbours.
// Longitudinal positions stay put so the density along the line is preserved.
void ridge_pull(std::vector<Point2>& pts, std::vector<Point2>& dirs, double lateral,
                double forward, double angle_deg, int iters) {
  if (pts.empty()) return;
  const std::vector<Point2> base = pts;
  const std::vector<Point2> base_dir = dirs;
  PointGrid grid(base, forward);
  double cos_gate = std::cos(angle_deg * kPi / 180.0);
  double win = std::hypot(forward, lateral);
  std::vector<int> cand;
  for (size_t i = 0; i < pts.size(); ++i) {
    Point2 x = base[i], d = base_dir[i];
    for (int it = 0; it < iters; ++it) {
      grid.query(x, win, cand);
      Point2 psum{0.0, 0.0}, dsum{0.0, 0.0};
      int n = 0;
      for (int j : cand) {
        Point2 v = base[j] - x;
        if (std::abs(d.dot(v)) > forward) continue;
        if (std::abs(d.cross(v)) > lateral) continue;
        if (d.dot(base_dir[j]) < cos_gate) continue;
        psum = psum + base[j];
        dsum = dsum + base_dir[j];
        ++n;
      }
      if (n == 0) break;
      Point2 m = psum * (1.0 / n);
      Point2 nrm = d.perp();
      Point2 xn = x + nrm * nrm.dot(m - x);
      Point2 dn = dsum.norm2() > 0.0 ? dsum.normalized() : d;
      double moved = dist(xn, x) + std::abs(1.0 - d.dot(dn));
      x = xn;
      d = dn;
      if (moved < 1e-9) break;
    }
    pts[i] = x;
    dirs[i] = d;
  }
}

// Collapse points into cluster centroids: walk the list in order, each
// unvisited point absorbs every unvisited direction-compatible neighbour
// within the weld radius. All criteria are relative geometry plus input
// order, so the result commutes with a rigid transform of the inputs.
// Clusters supported by fewer than min_support raw points are discarded.
void thin_points(const std::vector<Point2>& pts, const std::vector<Point2>& dirs,
                 double radius, double angle_deg, int min_support,
                 std::vector<Point2>& centroids, std::vector<Point2>& cdirs) {
  if (pts.empty()) return;
  PointGrid grid(pts, radius);
  double cos_gate = std::cos(angle_deg * kPi / 180.0);
  std::vector<char> used(pts.size(), 0);
  std::vector<int> cand;
  for (size_t i = 0; i < pts.size(); ++i) {
    if (used[i]) continue;
    grid.query(pts[i], radius, cand);
    Point2 psum{0.0, 0.0}, dsum{0.0, 0.0};
    int n = 0;
    for (int j : cand) {
      if (used[j] || dirs[i].dot(dirs[j]) < cos_gate) continue;
      used[j] = 1;
      psum = psum + pts[j];
      dsum = dsum + dirs[j];
      ++n;
    }
    if (n < min_support) continue;
    centroids.push_back(psum * (1.0 / n));
    cdirs.push_back(dsum.norm2() > 0.0 ? dsum.normalized() : dirs[i]);
  }
}

// Greedy walks over centroids: extend with the straightest nearby unused
// point, both ways from each seed. Turn is bucketed to whole degrees so the
// choice is stable under rounding.
std::vector<std::vector<int>> chain_points(const std::vector<Point2>& pts, double gap,
                                           double angle_deg, int min_chain) {
  std::vector<std::vector<int>> chains;
  if (pts.empty()) return chains;
  PointGrid grid(pts, gap);
  std::vector<char> used(pts.size(), 0);
  std::vector<int> cand;
  auto extend = [&](std::vector<int>& chain) {
    for (;;) {
      int cur = chain.back();
      bool has_dir = chain.size() >= 2;
      Point2 dir;
      if (has_dir) dir = (pts[cur] - pts[chain[chain.size() - 2]]).normalized();
      grid.query(pts[cur], gap, cand);
      int best = -1, bturn = 0;
      double bdist = 0.0;
      for (int j : cand) {
        if (used[j]) continue;
        double d = dist(pts[cur], pts[j]);
        if (d > gap || d < 1e-12) continue;
        int turn = 0;
        if (has_dir) {
          double c = std::clamp(dir.dot((pts[j] - pts[cur]) * (1.0 / d)), -1.0, 1.0);
          double ang = std::acos(c) * 180.0 / kPi;
          if (ang > angle_deg) continue;
          turn = static_cast<int>(std::ceil(ang - 1e-9));
        }
        if (best < 0 || std::tie(turn, d, j) < std::tie(bturn, bdist, best)) {
          best = j;
          bturn = turn;
          bdist = d;
        }
      }
      if (best < 0) break;
      used[best] = 1;
      chain.push_back(best);
    }
  };
  for (size_t seed = 0; seed < pts.size(); ++seed) {
    if (used[seed]) continue;
    used[seed] = 1;
    std::vector<int> chain{static_cast<int>(seed)};
    extend(chain);
    std::reverse(chain.begin(), chain.end());
    extend(chain);
    if (static_cast<int>(chain.size()) >= min_chain) chains.push_back(std::move(chain));
  }
  return chains;
}

}  // namespace

namespace {

// One ICP correspondence. `dir` is the matched segment's unit direction.
// `terminal` marks feet clamped to an end vertex of a reference line: sliding
// a straight line along itself or an arc around its own center is free, so
// those pairs are the only ones that pin the along-line motion.
struct IcpPair {
  Point2 a;
  Point2 b;
  Point2 dir;
  bool terminal;
};

// Minimizer of the hybrid metric around `base`, with correspondences held
// fixed: squared point-to-line distance for interior pairs, squared
// point-to-point distance for terminal pairs. Small-angle Newton steps on
// (dtheta, dt); returns base when the system is degenerate.
RigidTransform2 refine_anchored(const std::vector<IcpPair>& pairs,
                                const RigidTransform2& base) {
  RigidTransform2 t = base;
  for (int step = 0; step < 3; ++step) {
    double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double rhs[3] = {0, 0, 0};
    auto add_row = [&](double j0, double j1, double j2, double r) {
      const double j[3] = {j0, j1, j2};
      for (int u = 0; u < 3; ++u) {
        for (int v = 0; v < 3; ++v) m[u][v] += j[u] * j[v];
        rhs[u] += j[u] * r;
      }
    };
    for (const auto& pr : pairs) {
      Point2 p = t.apply(pr.a);
      Point2 rot{-p.y, p.x};
      Point2 e = pr.b - p;
      if (pr.terminal) {
        add_row(rot.x, 1.0, 0.0, e.x);
        add_row(rot.y, 0.0, 1.0, e.y);
      } else {
        Point2 n = pr.dir.perp();
        add_row(n.dot(rot), n.x, n.y, n.dot(e));
      }
    }
    auto det3 = [](double a00, double a01, double a02, double a10, double a11,
                   double a12, double a20, double a21, double a22) {
      return a00 * (a11 * a22 - a12 * a21) - a01 * (a10 * a22 - a12 * a20) +
             a02 * (a10 * a21 - a11 * a20);
    };
    double det = det3(m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2],
                      m[2][0], m[2][1], m[2][2]);
    if (std::abs(det) < 1e-12) return base;
    double dth = det3(rhs[0], m[0][1], m[0][2], rhs[1], m[1][1], m[1][2],
                      rhs[2], m[2][1], m[2][2]) /
                 det;
    double dtx = det3(m[0][0], rhs[0], m[0][2], m[1][0], rhs[1], m[1][2],
                      m[2][0], rhs[2], m[2][2]) /
                 det;
    double dty = det3(m[0][0], m[0][1], rhs[0], m[1][0], m[1][1], rhs[1],
                      m[2][0], m[2][1], rhs[2]) /
                 det;
    t = RigidTransform2{dth, dtx, dty}.compose(t);
  }
  return t;
}

// Core ICP loop. Source point i matches only reference lines in
// refs[bucket[i]]; a step is adopted only when it improves the mean residual,
// so the recorded residuals never increase.
IcpResult icp_run(const std::vector<Point2>& src, const std::vector<uint8_t>& bucket,
                  const std::vector<std::vector<Polyline>>& refs,
                  const PreprocessConfig& cfg) {
  IcpResult out;
  if (src.size() < 3) return out;
  std::vector<std::unique_ptr<SegmentIndex>> index(refs.size());
  bool any = false;
  for (size_t k = 0; k < refs.size(); ++k) {
    bool has_seg = false;
    for (const auto& p : refs[k]) has_seg = has_seg || p.size() >= 2;
    if (!has_seg) continue;
    index[k] = std::make_unique<SegmentIndex>(refs[k], 2.0);
    any = true;
  }
  if (!any) return out;

  auto correspond = [&](const RigidTransform2& t, std::vector<IcpPair>& pairs) {
    pairs.clear();
    double sum = 0.0;
    for (size_t i = 0; i < src.size(); ++i) {
      const SegmentIndex* idx = index[bucket[i]].get();
      if (!idx) continue;
      auto hit = idx->nearest(t.apply(src[i]), cfg.icp_gate);
      if (!hit.found) continue;
      const auto& pts = refs[bucket[i]][hit.line].pts;
      bool terminal =
          (hit.seg == 0 && (hit.foot - pts.front()).norm2() < 1e-16) ||
          (hit.seg + 2 == static_cast<int>(pts.size()) &&
           (hit.foot - pts.back()).norm2() < 1e-16);
      pairs.push_back({src[i], hit.foot, terminal});
      sum += std::sqrt(hit.dist2);
    }
    return pairs.empty() ? std::numeric_limits<double>::infinity()
                         : sum / pairs.size();
  };

  RigidTransform2 t;
  std::vector<IcpPair> pairs, cand;
  double res = correspond(t, pairs);
  if (pairs.size() < 3) return out;
  out.residuals.push_back(res);
  std::vector<Point2> a, b;
  for (int iter = 1; iter <= cfg.icp_max_iter; ++iter) {
    a.clear();
    b.clear();
    for (const auto& p : pairs) {
      a.push_back(p.a);
      b.push_back(p.b);
    }
    RigidTransform2 best_t = fit_rigid(a, b);
    double best_r = correspond(best_t, cand);
    size_t best_n = cand.size();

    // Second candidate: shift the plain fit by the mean leftover of the
    // terminal pairs. The plain fit dilutes their along-line pull across all
    // pairs and creeps; this jumps, and a bad jump is simply rejected below.
    Point2 dsum{0.0, 0.0};
    int n_term = 0;
    for (const auto& p : pairs) {
      if (!p.terminal) continue;
      dsum = dsum + (p.b - best_t.apply(p.a));
      ++n_term;
    }
    if (n_term > 0) {
      RigidTransform2 t2{best_t.theta, best_t.tx + dsum.x / n_term,
                         best_t.ty + dsum.y / n_term};
      std::vector<IcpPair> cand2;
      double r2 = correspond(t2, cand2);
      if (cand2.size() >= 3 && r2 < best_r) {
        best_t = t2;
        best_r = r2;
        best_n = cand2.size();
        cand.swap(cand2);
      }
    }

    if (best_n < 3 || best_r >= res - cfg.icp_tol) {
      out.converged = true;
      break;
    }
    t = best_t;
    res = best_r;
    pairs.swap(cand);
    out.residuals.push_back(res);
    out.iterations = iter;
  }
  out.transform = t;
  return out;
}

}  // namespace

IcpResult icp_align(const std::vector<Point2>& src, const std::vector<Polyline>& ref,
                    const PreprocessConfig& cfg) {
  std::vector<uint8_t> bucket(src.size(), 0);
  return icp_run(src, bucket, {ref}, cfg);
}

IcpResult icp_align(const std::vector<Polyline>& src, const std::vector<Polyline>& ref,
                    const PreprocessConfig& cfg) {
  std::vector<Point2> pts;
  std::vector<uint8_t> bucket;
  for (const auto& line : src) {
    if (line.size() < 2) continue;
    Polyline r = resample_polyline(line, cfg.icp_resample);
    for (const auto& p : r.pts) {
      pts.push_back(p);
      bucket.push_back(line.kind == PolylineKind::Boundary ? 1 : 0);
    }
  }
  std::vector<std::vector<Polyline>> refs(2);
  for (const auto& line : ref)
    refs[line.kind == PolylineKind::Boundary ? 1 : 0].push_back(line);
  return icp_run(pts, bucket, refs, cfg);
}

std::vector<RigidTransform2> align_drives(const std::vector<Polyline>& polylines,
                                          int n_drives, const PreprocessConfig& cfg) {
  std::vector<RigidTransform2> t(std::max(n_drives, 0));
  if (n_drives <= 1) return t;

  std::vector<std::vector<Polyline>> src(n_drives);
  for (const auto& p : polylines) {
    if (p.drive < 0 || p.drive >= n_drives || p.size() < 2) continue;
    src[p.drive].push_back(p);
  }

  for (int round = 0; round < cfg.align_rounds; ++round) {
    for (int d = 0; d < n_drives; ++d) {
      if (src[d].empty()) continue;
      std::vector<Polyline> ref;
      for (const auto& p : polylines) {
        if (p.drive < 0 || p.drive >= n_drives || p.drive == d || p.size() < 2) continue;
        ref.push_back(apply_rigid(t[p.drive], p));
      }
      if (ref.empty()) continue;
      std::vector<Polyline> moved;
      moved.reserve(src[d].size());
      for (const auto& p : src[d]) moved.push_back(apply_rigid(t[d], p));
      IcpResult r = icp_align(moved, ref, cfg);
      t[d] = r.transform.compose(t[d]);
    }
  }
  return t;
}

std::vector<Polyline> aggregate_boundaries(const std::vector<Polyline>& obs,
                                           const PreprocessConfig& cfg) {
  std::vector<Point2> pts, dirs;
  collect_points(obs, cfg.agg_resample, pts, dirs);
  ridge_pull(pts, dirs, cfg.agg_lateral, cfg.agg_forward, cfg.ridge_angle_deg,
             cfg.ridge_iters);
  std::vector<Point2> centroids, cdirs;
  thin_points(pts, dirs, cfg.weld_radius, cfg.ridge_angle_deg, cfg.min_support,
              centroids, cdirs);
  std::vector<Polyline> out;
  for (const auto& ch : chain_points(centroids, cfg.chain_gap, cfg.chain_angle_deg,
                                     cfg.min_chain)) {
    Polyline p;
    p.kind = PolylineKind::Boundary;
    for (int i : ch) p.pts.push_back(centroids[i]);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Polyline> bundle_traces(const std::vector<Polyline>& traces,
                                    const PreprocessConfig& cfg) {
  std::vector<Point2> pts, dirs;
  collect_points(traces, cfg.ridge_resample, pts, dirs);
  ridge_pull(pts, dirs, cfg.ridge_lateral, cfg.ridge_forward, cfg.ridge_angle_deg,
             cfg.ridge_iters);
  std::vector<Point2> centroids, cdirs;
  thin_points(pts, dirs, cfg.weld_radius, cfg.ridge_angle_deg, cfg.min_support,
              centroids, cdirs);
  std::vector<Polyline> out;
  for (const auto& ch : chain_points(centroids, cfg.chain_gap, cfg.chain_angle_deg,
                                     cfg.min_chain)) {
    Polyline p;
    p.kind = PolylineKind::Trace;
    for (int i : ch) p.pts.push_back(centroids[i]);
    double along = 0.0;
    for (size_t i = 0; i + 1 < p.size(); ++i)
      along += cdirs[ch[i]].dot(p.pts[i + 1] - p.pts[i]);
    if (along < 0.0) std::reverse(p.pts.begin(), p.pts.end());
    if (polyline_length(p) >= cfg.rep_min_len) out.push_back(std::move(p));
  }
  return out;
}

std::vector<CenterPoint> derive_center_points(const std::vector<Polyline>& reps,
                                              double spacing) {
  std::vector<CenterPoint> centers;
  for (const auto& rep : reps) {
    if (rep.size() < 2 || polyline_length(rep) < 1e-9) continue;
    Polyline r = resample_polyline(rep, spacing);
    size_t n = r.size();
    for (size_t i = 0; i < n; ++i) {
      size_t lo = i > 0 ? i - 1 : 0;
      size_t hi = i + 1 < n ? i + 1 : n - 1;
      CenterPoint c;
      c.pos = r.pts[i];
      c.dir = (r.pts[hi] - r.pts[lo]).normalized();
      centers.push_back(c);
    }
  }
  return centers;
}

std::vector<LanePair> match_gt_lane_pairs(const std::vector<CenterPoint>& centers,
                                          const std::vector<Polyline>& boundaries,
                                          double radius) {
  std::vector<LanePair> pairs;
  pairs.reserve(centers.size());
  double r2 = radius * radius;
  for (const auto& c : centers) {
    struct Side {
      double d2 = std::numeric_limits<double>::infinity();
      Point2 p;
    };
    Side best[2];  // 0: left, 1: right
    for (const auto& b : boundaries) {
      for (size_t i = 0; i + 1 < b.size(); ++i) {
        Point2 a0 = b.pts[i], a1 = b.pts[i + 1];
        Point2 ab = a1 - a0;
        double len2 = ab.norm2();
        double f0 = c.dir.cross(a0 - c.pos);
        double f1 = c.dir.cross(a1 - c.pos);
        for (int side = 0; side < 2; ++side) {
          double sgn = side == 0 ? 1.0 : -1.0;
          double g0 = sgn * f0, g1 = sgn * f1;
          if (g0 < 0.0 && g1 < 0.0) continue;
          double t = 0.0;
          if (len2 >= 1e-18) {
            double t0 = 0.0, t1 = 1.0;
            if (g0 < 0.0)
              t0 = f0 / (f0 - f1);
            else if (g1 < 0.0)
              t1 = f0 / (f0 - f1);
            t = std::clamp((c.pos - a0).dot(ab) / len2, t0, t1);
          } else if (g0 < 0.0) {
            continue;
          }
          Point2 p = a0 + ab * t;
          double d2 = (p - c.pos).norm2();
          if (d2 < best[side].d2) best[side] = {d2, p};
        }
      }
    }
    LanePair lp;
    lp.center = c.pos;
    if (best[0].d2 <= r2 && best[1].d2 <= r2) {
      lp.left = best[0].p;
      lp.right = best[1].p;
      lp.matched = true;
    } else {
      lp.left = c.pos;
      lp.right = c.pos;
      lp.matched = false;
    }
    pairs.push_back(lp);
  }
  return pairs;
}

std::vector<std::pair<int, int>> derive_adjacency(const std::vector<CenterPoint>& centers,
                                                  const GtInfo& gt,
                                                  const PreprocessConfig& cfg) {
  struct Assigned {
    double s;
    int index;
    bool operator<(const Assigned& o) const {
      return s != o.s ? s < o.s : index < o.index;
    }
  };
  std::vector<std::vector<Assigned>> per_lane(gt.lanes.size());
  double gate2 = cfg.label_radius * cfg.label_radius;
  for (size_t i = 0; i < centers.size(); ++i) {
    int lane = -1;
    double bd2 = gate2;
    double bs = 0.0;
    for (size_t li = 0; li < gt.lanes.size(); ++li) {
      Projection pr = project_to_polyline(centers[i].pos, gt.lanes[li].center);
      if (pr.dist2 < bd2) {
        bd2 = pr.dist2;
        lane = static_cast<int>(li);
        bs = pr.s;
      }
    }
    if (lane >= 0) per_lane[lane].push_back({bs, static_cast<int>(i)});
  }

  double max_gap = cfg.succ_gap_factor * cfg.center_spacing;
  double slack = cfg.conn_slack_factor * cfg.center_spacing;
  std::vector<std::pair<int, int>> edges;
  for (auto& lane : per_lane) {
    std::sort(lane.begin(), lane.end());
    for (size_t i = 0; i + 1 < lane.size(); ++i)
      if (lane[i + 1].s - lane[i].s <= max_gap)
        edges.push_back({lane[i].index, lane[i + 1].index});
  }
  for (const auto& conn : gt.connections) {
    if (conn.from_lane < 0 || conn.from_lane >= static_cast<int>(per_lane.size()) ||
        conn.to_lane < 0 || conn.to_lane >= static_cast<int>(per_lane.size()))
      continue;
    int a = -1, b = -1;
    for (const auto& n : per_lane[conn.from_lane])
      if (n.s <= conn.s_from + slack && conn.s_from - n.s <= max_gap) a = n.index;
    const auto& to = per_lane[conn.to_lane];
    for (size_t i = to.size(); i-- > 0;)
      if (to[i].s >= conn.s_to - slack && to[i].s - conn.s_to <= max_gap) b = to[i].index;
    if (a >= 0 && b >= 0 && a != b) edges.push_back({a, b});
  }

  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

namespace {

// Re-cut a polyline into pieces of about n_pts vertices, consecutive pieces
// sharing one vertex. A short tail is folded into the previous piece.
void split_into(const Polyline& p, int n_pts, std::vector<Polyline>& out) {
  int n = static_cast<int>(p.size());
  if (n < 2) return;
  int step = std::max(n_pts - 1, 1);
  for (int start = 0; start < n - 1;) {
    int end = std::min(start + step, n - 1);
    if (n - 1 - end < 2 && end < n - 1) end = n - 1;  // absorb the stub
    Polyline piece;
    piece.kind = p.kind;
    piece.drive = p.drive;
    piece.pts.assign(p.pts.begin() + start, p.pts.begin() + end + 1);
    out.push_back(std::move(piece));
    start = end;
  }
}

}  // namespace

MinimapRecord preprocess_minimap(const MinimapRecord& rec, const PreprocessConfig& cfg) {
  MinimapRecord out = rec;

  int n_drives = 0;
  for (const auto& p : rec.polylines) n_drives = std::max(n_drives, p.drive + 1);
  std::vector<RigidTransform2> est = align_drives(rec.polylines, n_drives, cfg);

  std::vector<Polyline> traces, obs;
  for (const auto& p : rec.polylines) {
    Polyline q = p.drive >= 0 && p.drive < static_cast<int>(est.size())
                     ? apply_rigid(est[p.drive], p)
                     : p;
    (q.kind == PolylineKind::Trace ? traces : obs).push_back(std::move(q));
  }

  std::vector<Polyline> reps = bundle_traces(traces, cfg);
  std::vector<Polyline> marks = aggregate_boundaries(obs, cfg);

  out.centers = derive_center_points(reps, cfg.center_spacing);
  out.gt_pairs = match_gt_lane_pairs(out.centers, rec.gt.boundaries, cfg.match_radius);
  out.gt_edges = derive_adjacency(out.centers, rec.gt, cfg);

  out.polylines.clear();
  for (const auto& r : reps) split_into(r, cfg.out_trace_pts, out.polylines);
  for (const auto& m : marks) split_into(m, cfg.out_boundary_pts, out.polylines);
  out.stage = "preprocessed";
  return out;
}

}  // namespace lanegraph::prep
