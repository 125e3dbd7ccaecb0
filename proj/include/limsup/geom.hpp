#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "limsup/error.hpp"

namespace limsup {

using Vec = std::vector<double>;

/// Closed Euclidean ball.
struct Ball {
  Vec center;
  double radius = 0.0;

  Ball() = default;
  Ball(Vec c, double r);
  std::size_t dim() const { return center.size(); }
  double diameter() const { return 2.0 * radius; }
};

/// Closed axis-aligned cube [corner, corner + side]^d.
struct AxisCube {
  Vec corner;
  double side = 0.0;

  AxisCube() = default;
  AxisCube(Vec c, double s);
  std::size_t dim() const { return corner.size(); }
  double diameter() const;
  Vec center() const;
};

/// Axis-aligned ellipsoid; semiaxes are stored nonincreasing and semiaxis j
/// lies along coordinate j.
struct Ellipsoid {
  Vec center;
  Vec semiaxes;

  Ellipsoid() = default;
  Ellipsoid(Vec c, Vec axes);
  std::size_t dim() const { return center.size(); }
};

/// Finite union of interior-disjoint cubes.
struct CubeUnion {
  std::vector<AxisCube> cubes;

  CubeUnion() = default;
  explicit CubeUnion(std::vector<AxisCube> cs);
  std::size_t dim() const { return cubes.empty() ? 0 : cubes.front().dim(); }
  bool empty() const { return cubes.empty(); }
};

using Shape = std::variant<Ball, AxisCube, Ellipsoid, CubeUnion>;

/// Volume of the unit ball in R^d.
double unit_ball_volume(std::size_t d);

double volume(const Ball& b);
double volume(const AxisCube& c);
double volume(const Ellipsoid& e);
double volume(const CubeUnion& u);
double volume(const Shape& s);

double diameter(const CubeUnion& u);
double diameter(const Shape& s);
std::size_t dim(const Shape& s);

/// Smallest axis box [lo, hi] containing the shape.
struct Box {
  Vec lo;
  Vec hi;
};
Box bounding_box(const Shape& s);

Ball scale_ball(const Ball& b, double m);

bool contains(const Ball& outer, const Ball& inner);
bool contains(const Ball& outer, const AxisCube& inner);
bool contains(const AxisCube& outer, const Ball& inner);
bool contains(const AxisCube& outer, const AxisCube& inner);
bool contains(const Ball& outer, const CubeUnion& inner);
bool contains(const AxisCube& outer, const CubeUnion& inner);
bool contains(const Ball& outer, const Ellipsoid& inner);
bool contains(const Ball& outer, const Shape& inner);
bool contains(const AxisCube& outer, const Shape& inner);

/// Strict separation: tangent balls are not disjoint.
bool disjoint(const Ball& a, const Ball& b);

/// Splits every component uniformly into k^d cubes, k = ceil(diam / target).
CubeUnion subdivide(const CubeUnion& u, double target_diam);
std::vector<AxisCube> subdivide(const AxisCube& c, double target_diam);

double distance(const Vec& a, const Vec& b);
bool point_in(const AxisCube& c, const Vec& x);
bool point_in(const Ball& b, const Vec& x);

/// Squared distance from x to the nearest point of the cube.
double min_dist2(const AxisCube& c, const Vec& x);
/// Squared distance from x to the farthest point of the cube.
double max_dist2(const AxisCube& c, const Vec& x);

/// Positive-volume intersection test.
bool interiors_meet(const AxisCube& a, const AxisCube& b);

/// lambda(B_r(x) ∩ c). Exact for d <= 2; composite Gauss-Legendre in the
/// leading coordinate for d >= 3.
double ball_cube_overlap(const Vec& x, double r, const AxisCube& c);

}  // namespace limsup
