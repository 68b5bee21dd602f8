#include "lanegraph/hex.hpp"

#include <cmath>

namespace lanegraph::hex {

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
}

double default_apothem() { return std::sqrt(18000.0 / (2.0 * kSqrt3)); }

Point2 tile_center(const TileId& t, double apothem) {
  // Pointy-top axial layout: q steps 2a east, r steps (a, 1.5*R).
  double rr = circumradius(apothem);
  return {apothem * (2.0 * t.q + t.r), 1.5 * rr * t.r};
}

TileId tile_assign(const Point2& p, double apothem) {
  double rr = circumradius(apothem);
  // Fractional axial coordinates, inverse of tile_center.
  double rf = p.y / (1.5 * rr);
  double qf = (p.x / apothem - rf) / 2.0;
  // Cube rounding: round all three cube coordinates, fix the worst one.
  double sf = -qf - rf;
  double q = std::round(qf), r = std::round(rf), s = std::round(sf);
  double dq = std::abs(q - qf), dr = std::abs(r - rf), ds = std::abs(s - sf);
  if (dq > dr && dq > ds)
    q = -r - s;
  else if (dr > ds)
    r = -q - s;
  return {static_cast<int>(q), static_cast<int>(r)};
}

std::array<TileId, 6> neighbors(const TileId& t) {
  return {TileId{t.q + 1, t.r},     TileId{t.q + 1, t.r - 1}, TileId{t.q, t.r - 1},
          TileId{t.q - 1, t.r},     TileId{t.q - 1, t.r + 1}, TileId{t.q, t.r + 1}};
}

TileId spiral(int index) {
  if (index <= 0) return {0, 0};
  // Ring k holds 6k tiles; find the ring containing index.
  int k = 1;
  int base = 1;
  while (index >= base + 6 * k) {
    base += 6 * k;
    ++k;
  }
  int off = index - base;
  int side = off / k;
  int step = off % k;
  // Start of the ring: k steps east, then walk the six sides counter-clockwise.
  static const int dq[6] = {-1, -1, 0, 1, 1, 0};
  static const int dr[6] = {1, 0, -1, -1, 0, 1};
  TileId t{k, 0};
  for (int s = 0; s < side; ++s) {
    t.q += dq[s] * k;
    t.r += dr[s] * k;
  }
  t.q += dq[side] * step;
  t.r += dr[side] * step;
  return t;
}

}  // namespace lanegraph::hex
