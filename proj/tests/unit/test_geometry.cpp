#include <doctest.h>

#include <cmath>

#include "common/field.hpp"
#include "common/geometry.hpp"
#include "common/rng.hpp"

using namespace wtt;

TEST_CASE("point in polygon on a unit square") {
  const Polygon sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(point_in_polygon({0.5, 0.5}, sq));
  CHECK_FALSE(point_in_polygon({1.5, 0.5}, sq));
  CHECK_FALSE(point_in_polygon({0.5, -0.1}, sq));
}

TEST_CASE("point in polygon handles a concave outline") {
  // U shape open to the north.
  const Polygon u{{0, 0}, {3, 0}, {3, 3}, {2, 3}, {2, 1}, {1, 1}, {1, 3}, {0, 3}};
  CHECK(point_in_polygon({0.5, 2.5}, u));
  CHECK(point_in_polygon({2.5, 2.5}, u));
  CHECK_FALSE(point_in_polygon({1.5, 2.0}, u));
  CHECK(point_in_polygon({1.5, 0.5}, u));
}

TEST_CASE("simple polygon detection") {
  CHECK(is_simple_polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
  // Bow tie.
  CHECK_FALSE(is_simple_polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}));
  CHECK_FALSE(is_simple_polygon({{0, 0}, {1, 0}}));
}

TEST_CASE("area and bounding box") {
  const Polygon tri{{0, 0}, {4, 0}, {0, 3}};
  CHECK(polygon_area(tri) == doctest::Approx(6.0));
  const Box b = bounding_box(tri);
  CHECK(b.x0 == 0.0);
  CHECK(b.x1 == 4.0);
  CHECK(b.y1 == 3.0);
}

TEST_CASE("rng streams are reproducible and independent") {
  Rng a(derive_seed(42, 1)), b(derive_seed(42, 1)), c(derive_seed(42, 2));
  bool differs = false;
  for (int k = 0; k < 100; ++k) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    differs |= x != c.uniform();
  }
  CHECK(differs);
}

TEST_CASE("rng below stays in range and hits every value") {
  Rng r(7);
  int seen[5] = {};
  for (int k = 0; k < 1000; ++k) {
    const auto v = r.below(5);
    REQUIRE(v < 5);
    ++seen[v];
  }
  for (int s : seen) CHECK(s > 100);
}

TEST_CASE("field indexing is row major with south row first") {
  Field2D<int> f(3, 2, 0);
  f(2, 1) = 7;
  CHECK(f.data()[5] == 7);
  CHECK(f.in_bounds(2, 1));
  CHECK_FALSE(f.in_bounds(3, 0));
}
