#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace lanegraph {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2() = default;
  Point2(double px, double py) : x(px), y(py) {}

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Point2& o) const { return x * o.x + y * o.y; }
  double cross(const Point2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double norm2() const { return x * x + y * y; }
  Point2 normalized() const {
    double n = norm();
    return n > 0.0 ? Point2{x / n, y / n} : Point2{0.0, 0.0};
  }
  Point2 perp() const { return {-y, x}; }  // 90 degrees counter-clockwise
};

inline double dist(const Point2& a, const Point2& b) { return (a - b).norm(); }

enum class PolylineKind : uint8_t { Trace = 0, Boundary = 1 };

struct Polyline {
  std::vector<Point2> pts;
  PolylineKind kind = PolylineKind::Trace;
  int drive = -1;  // originating drive, -1 once aggregated

  size_t size() const { return pts.size(); }
  bool empty() const { return pts.empty(); }
};

// A sampled lane cross-section: center point with its left/right boundary
// points. Matched flag distinguishes labeled pairs from centers that have no
// usable boundary evidence.
struct LanePair {
  Point2 center;
  Point2 left;
  Point2 right;
  bool matched = true;
};

inline double lane_width(const LanePair& p) { return dist(p.left, p.right); }

struct CenterPoint {
  Point2 pos;
  Point2 dir;  // unit tangent, driving direction
};

// Directed lane graph over pair indices. adj is row-major n*n, adj[i*n+j]=1
// meaning pair j succeeds pair i.
struct LaneGraph {
  std::vector<LanePair> pairs;
  std::vector<uint8_t> adj;

  int n() const { return static_cast<int>(pairs.size()); }
  bool edge(int i, int j) const { return adj[static_cast<size_t>(i) * pairs.size() + j] != 0; }
  void set_edge(int i, int j, bool v) {
    adj[static_cast<size_t>(i) * pairs.size() + j] = v ? 1 : 0;
  }
  void resize_adj() { adj.assign(pairs.size() * pairs.size(), 0); }
};

// Proper rigid motion: rotation by theta, then translation.
struct RigidTransform2 {
  double theta = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  Point2 apply(const Point2& p) const {
    double c = std::cos(theta), s = std::sin(theta);
    return {c * p.x - s * p.y + tx, s * p.x + c * p.y + ty};
  }

  RigidTransform2 inverse() const {
    double c = std::cos(theta), s = std::sin(theta);
    return {-theta, -(c * tx + s * ty), -(-s * tx + c * ty)};
  }

  // this after other: apply(other.apply(p))
  RigidTransform2 compose(const RigidTransform2& other) const {
    double c = std::cos(theta), s = std::sin(theta);
    return {theta + other.theta, c * other.tx - s * other.ty + tx,
            s * other.tx + c * other.ty + ty};
  }
};

Polyline apply_rigid(const RigidTransform2& t, const Polyline& p);
std::vector<Point2> apply_rigid(const RigidTransform2& t, const std::vector<Point2>& pts);

double polyline_length(const Polyline& p);

// Uniform resampling: the span is divided into ceil(length/spacing) equal
// steps so both endpoints are kept exactly and resampling an already uniform
// polyline reproduces it. spacing > length yields just the two endpoints.
Polyline resample_polyline(const Polyline& p, double spacing);

// Point at arc length s (clamped to [0, length]).
Point2 point_at(const Polyline& p, double s);

// Unit tangent at arc length s, taken from the containing segment.
Point2 tangent_at(const Polyline& p, double s);

struct Projection {
  double dist2 = 1e300;  // squared distance
  double s = 0.0;        // arc length of the foot point
  Point2 foot;
  int seg = -1;  // index of the segment hit
};

Point2 closest_point_on_segment(const Point2& p, const Point2& a, const Point2& b,
                                double* t_out = nullptr);

// Closest point on a polyline, scanning all segments.
Projection project_to_polyline(const Point2& q, const Polyline& p);

// Uniform hash grid over line segments for nearest-segment queries. Holds
// references into the polylines passed at build time.
class SegmentIndex {
 public:
  SegmentIndex(const std::vector<Polyline>& lines, double cell);

  // Nearest point over all indexed segments within radius; found=false when
  // nothing is inside the radius.
  struct Hit {
    bool found = false;
    double dist2 = 1e300;
    Point2 foot;
    int line = -1;
    int seg = -1;
  };
  Hit nearest(const Point2& q, double radius) const;

 private:
  struct SegRef {
    int line;
    int seg;
  };
  int64_t key(int cx, int cy) const;
  const std::vector<Polyline>& lines_;
  double cell_;
  std::vector<std::pair<int64_t, SegRef>> entries_;  // sorted by key
  std::vector<size_t> bucket_start_;
  std::vector<int64_t> bucket_key_;
};

// Least-squares rigid fit mapping src points onto dst points (same length).
RigidTransform2 fit_rigid(const std::vector<Point2>& src, const std::vector<Point2>& dst);

// The stretch between arc lengths s0 < s1: interpolated endpoints plus the
// original interior vertices.
Polyline sub_polyline(const Polyline& p, double s0, double s1);

// Parallel curve at signed lateral offset (positive = left of travel), using
// averaged vertex normals. Exact for straight lines, good for gentle curves.
Polyline offset_polyline(const Polyline& p, double offset);

}  // namespace lanegraph
