#pragma once

#include <array>
#include <cstdint>

#include "lanegraph/geometry.hpp"

namespace lanegraph::hex {

// Pointy-top hexagonal tiling in axial coordinates. Tile size is fixed by the
// target cell area of 18000 m^2: area = 2*sqrt(3)*apothem^2.
struct TileId {
  int q = 0;
  int r = 0;
  bool operator==(const TileId&) const = default;
};

double default_apothem();  // ~72.08 m, area 18000 m^2

// Circumradius (corner distance) for a given apothem.
inline double circumradius(double apothem) { return apothem * 2.0 / 1.7320508075688772; }

inline double tile_area(double apothem) { return 2.0 * 1.7320508075688772 * apothem * apothem; }

Point2 tile_center(const TileId& t, double apothem);
TileId tile_assign(const Point2& p, double apothem);

// The six neighbors in fixed axial order (E, NE, NW, W, SW, SE).
std::array<TileId, 6> neighbors(const TileId& t);

// Deterministic spiral enumeration around the origin tile: index 0 is the
// origin, then ring 1 in neighbor order, ring 2, ...
TileId spiral(int index);

}  // namespace lanegraph::hex
