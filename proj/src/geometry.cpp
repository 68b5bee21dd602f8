#include "lanegraph/geometry.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace lanegraph {

std::vector<Point2> apply_rigid(const RigidTransform2& t, const std::vector<Point2>& pts) {
  std::vector<Point2> out;
  out.reserve(pts.size());
  double c = std::cos(t.theta), s = std::sin(t.theta);
  for (const auto& p : pts) out.push_back({c * p.x - s * p.y + t.tx, s * p.x + c * p.y + t.ty});
  return out;
}

Polyline apply_rigid(const RigidTransform2& t, const Polyline& p) {
  Polyline out = p;
  out.pts = apply_rigid(t, p.pts);
  return out;
}

double polyline_length(const Polyline& p) {
  double len = 0.0;
  for (size_t i = 1; i < p.pts.size(); ++i) len += dist(p.pts[i - 1], p.pts[i]);
  return len;
}

Point2 point_at(const Polyline& p, double s) {
  assert(!p.pts.empty());
  if (s <= 0.0) return p.pts.front();
  for (size_t i = 1; i < p.pts.size(); ++i) {
    double seg = dist(p.pts[i - 1], p.pts[i]);
    if (s <= seg) {
      double t = seg > 0.0 ? s / seg : 0.0;
      return p.pts[i - 1] + (p.pts[i] - p.pts[i - 1]) * t;
    }
    s -= seg;
  }
  return p.pts.back();
}

Point2 tangent_at(const Polyline& p, double s) {
  assert(p.pts.size() >= 2);
  if (s < 0.0) s = 0.0;
  for (size_t i = 1; i < p.pts.size(); ++i) {
    double seg = dist(p.pts[i - 1], p.pts[i]);
    if (s <= seg && seg > 0.0) return (p.pts[i] - p.pts[i - 1]).normalized();
    s -= seg;
  }
  for (size_t i = p.pts.size(); i-- > 1;) {
    Point2 d = p.pts[i] - p.pts[i - 1];
    if (d.norm() > 0.0) return d.normalized();
  }
  return {1.0, 0.0};
}

Polyline resample_polyline(const Polyline& p, double spacing) {
  if (spacing <= 0.0) throw std::invalid_argument("resample_polyline: spacing must be positive");
  Polyline out;
  out.kind = p.kind;
  out.drive = p.drive;
  if (p.pts.size() < 2) {
    out.pts = p.pts;
    return out;
  }
  double len = polyline_length(p);
  if (len <= 0.0) {
    out.pts = {p.pts.front(), p.pts.back()};
    return out;
  }
  int n = std::max(1, static_cast<int>(std::ceil(len / spacing - 1e-9)));
  double step = len / n;
  out.pts.reserve(n + 1);
  out.pts.push_back(p.pts.front());
  size_t seg = 1;
  double seg_start = 0.0;
  double seg_len = dist(p.pts[0], p.pts[1]);
  for (int k = 1; k < n; ++k) {
    double s = step * k;
    while (seg_start + seg_len < s && seg + 1 < p.pts.size()) {
      seg_start += seg_len;
      ++seg;
      seg_len = dist(p.pts[seg - 1], p.pts[seg]);
    }
    double t = seg_len > 0.0 ? (s - seg_start) / seg_len : 0.0;
    out.pts.push_back(p.pts[seg - 1] + (p.pts[seg] - p.pts[seg - 1]) * t);
  }
  out.pts.push_back(p.pts.back());
  return out;
}

Point2 closest_point_on_segment(const Point2& p, const Point2& a, const Point2& b,
                                double* t_out) {
  Point2 ab = b - a;
  double len2 = ab.norm2();
  double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  if (t_out) *t_out = t;
  return a + ab * t;
}

Projection project_to_polyline(const Point2& q, const Polyline& p) {
  Projection best;
  if (p.pts.empty()) return best;
  if (p.pts.size() == 1) {
    best.dist2 = (q - p.pts[0]).norm2();
    best.s = 0.0;
    best.foot = p.pts[0];
    best.seg = 0;
    return best;
  }
  double s_acc = 0.0;
  for (size_t i = 1; i < p.pts.size(); ++i) {
    double t;
    Point2 foot = closest_point_on_segment(q, p.pts[i - 1], p.pts[i], &t);
    double d2 = (q - foot).norm2();
    double seg_len = dist(p.pts[i - 1], p.pts[i]);
    if (d2 < best.dist2) {
      best.dist2 = d2;
      best.s = s_acc + t * seg_len;
      best.foot = foot;
      best.seg = static_cast<int>(i) - 1;
    }
    s_acc += seg_len;
  }
  return best;
}

SegmentIndex::SegmentIndex(const std::vector<Polyline>& lines, double cell)
    : lines_(lines), cell_(cell) {
  assert(cell > 0.0);
  for (size_t li = 0; li < lines.size(); ++li) {
    const auto& pts = lines[li].pts;
    for (size_t si = 1; si < pts.size(); ++si) {
      const Point2& a = pts[si - 1];
      const Point2& b = pts[si];
      int x0 = static_cast<int>(std::floor(std::min(a.x, b.x) / cell_));
      int x1 = static_cast<int>(std::floor(std::max(a.x, b.x) / cell_));
      int y0 = static_cast<int>(std::floor(std::min(a.y, b.y) / cell_));
      int y1 = static_cast<int>(std::floor(std::max(a.y, b.y) / cell_));
      for (int cx = x0; cx <= x1; ++cx)
        for (int cy = y0; cy <= y1; ++cy)
          entries_.push_back({key(cx, cy),
                              {static_cast<int>(li), static_cast<int>(si) - 1}});
    }
  }
  std::sort(entries_.begin(), entries_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (i == 0 || entries_[i].first != entries_[i - 1].first) {
      bucket_key_.push_back(entries_[i].first);
      bucket_start_.push_back(i);
    }
  }
  bucket_start_.push_back(entries_.size());
}

int64_t SegmentIndex::key(int cx, int cy) const {
  return (static_cast<int64_t>(cx) << 32) ^ (static_cast<int64_t>(cy) & 0xffffffffll);
}

SegmentIndex::Hit SegmentIndex::nearest(const Point2& q, double radius) const {
  Hit best;
  int x0 = static_cast<int>(std::floor((q.x - radius) / cell_));
  int x1 = static_cast<int>(std::floor((q.x + radius) / cell_));
  int y0 = static_cast<int>(std::floor((q.y - radius) / cell_));
  int y1 = static_cast<int>(std::floor((q.y + radius) / cell_));
  double r2 = radius * radius;
  for (int cx = x0; cx <= x1; ++cx) {
    for (int cy = y0; cy <= y1; ++cy) {
      int64_t k = key(cx, cy);
      auto it = std::lower_bound(bucket_key_.begin(), bucket_key_.end(), k);
      if (it == bucket_key_.end() || *it != k) continue;
      size_t bi = static_cast<size_t>(it - bucket_key_.begin());
      for (size_t e = bucket_start_[bi]; e < bucket_start_[bi + 1]; ++e) {
        const SegRef& ref = entries_[e].second;
        const auto& pts = lines_[ref.line].pts;
        Point2 foot = closest_point_on_segment(q, pts[ref.seg], pts[ref.seg + 1]);
        double d2 = (q - foot).norm2();
        if (d2 > r2) continue;
        // Deterministic tie break on (line, seg).
        if (d2 < best.dist2 ||
            (d2 == best.dist2 &&
             (ref.line < best.line || (ref.line == best.line && ref.seg < best.seg)))) {
          best.found = true;
          best.dist2 = d2;
          best.foot = foot;
          best.line = ref.line;
          best.seg = ref.seg;
        }
      }
    }
  }
  return best;
}

Polyline sub_polyline(const Polyline& p, double s0, double s1) {
  assert(s0 < s1);
  Polyline out;
  out.kind = p.kind;
  out.drive = p.drive;
  out.pts.push_back(point_at(p, s0));
  double s_acc = 0.0;
  for (size_t i = 1; i + 1 < p.pts.size(); ++i) {
    s_acc += dist(p.pts[i - 1], p.pts[i]);
    if (s_acc > s0 + 1e-9 && s_acc < s1 - 1e-9) out.pts.push_back(p.pts[i]);
  }
  out.pts.push_back(point_at(p, s1));
  return out;
}

Polyline offset_polyline(const Polyline& p, double offset) {
  Polyline out;
  out.kind = p.kind;
  out.drive = p.drive;
  size_t n = p.pts.size();
  if (n < 2) {
    out.pts = p.pts;
    return out;
  }
  out.pts.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    Point2 d;
    if (i == 0)
      d = (p.pts[1] - p.pts[0]).normalized();
    else if (i + 1 == n)
      d = (p.pts[n - 1] - p.pts[n - 2]).normalized();
    else
      d = ((p.pts[i] - p.pts[i - 1]).normalized() + (p.pts[i + 1] - p.pts[i]).normalized())
              .normalized();
    out.pts.push_back(p.pts[i] + d.perp() * offset);
  }
  return out;
}

RigidTransform2 fit_rigid(const std::vector<Point2>& src, const std::vector<Point2>& dst) {
  assert(src.size() == dst.size());
  if (src.size() < 2) return {};
  double n = static_cast<double>(src.size());
  Point2 cs{0, 0}, cd{0, 0};
  for (size_t i = 0; i < src.size(); ++i) {
    cs = cs + src[i];
    cd = cd + dst[i];
  }
  cs = cs * (1.0 / n);
  cd = cd * (1.0 / n);
  double sxx = 0.0, sxy = 0.0;  // sums of dot and cross of centered pairs
  for (size_t i = 0; i < src.size(); ++i) {
    Point2 a = src[i] - cs;
    Point2 b = dst[i] - cd;
    sxx += a.dot(b);
    sxy += a.cross(b);
  }
  double theta = std::atan2(sxy, sxx);
  double c = std::cos(theta), s = std::sin(theta);
  return {theta, cd.x - (c * cs.x - s * cs.y), cd.y - (s * cs.x + c * cs.y)};
}

}  // namespace lanegraph
