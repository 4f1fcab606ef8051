#pragma once

#include <vector>

#include "common/vec2.hpp"

namespace wtt {

using Polygon = std::vector<Vec2>;

// Even-odd rule; points exactly on an edge may go either way.
bool point_in_polygon(Vec2 p, const Polygon& poly);

// True when no two non-adjacent edges intersect.
bool is_simple_polygon(const Polygon& poly);

struct Box {
  double x0, y0, x1, y1;
};
Box bounding_box(const Polygon& poly);

double polygon_area(const Polygon& poly);

}  // namespace wtt
