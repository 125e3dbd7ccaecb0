#include "limsup/geom.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>
#include <numbers>

namespace limsup {

namespace {

// Closed comparisons tolerate a few ulps of rounding in derived coordinates.
constexpr double kUlps = 8.0 * DBL_EPSILON;

bool approx_le(double a, double b) {
  return a <= b + kUlps * std::max({std::abs(a), std::abs(b), 1e-300});
}

double max_abs(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void require_same_dim(std::size_t a, std::size_t b) {
  require(a == b, "shapes live in different ambient dimensions");
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PreViolation: return "PRE_VIOLATION";
    case ErrorCode::InsufficientFamily: return "INSUFFICIENT_FAMILY";
    case ErrorCode::Degenerate: return "DEGENERATE";
    case ErrorCode::Unsupported: return "UNSUPPORTED";
    case ErrorCode::RasterEmpty: return "RASTER_EMPTY";
    case ErrorCode::DepthUnreachable: return "DEPTH_UNREACHABLE";
    case ErrorCode::UnresolvedScale: return "UNRESOLVED_SCALE";
    case ErrorCode::DepthTooShallow: return "DEPTH_TOO_SHALLOW";
    case ErrorCode::Io: return "IO";
  }
  return "UNKNOWN";
}

Ball::Ball(Vec c, double r) : center(std::move(c)), radius(r) {
  require(!center.empty(), "ball needs d >= 1");
  require(r > 0.0 && std::isfinite(r), "ball radius must be positive");
}

AxisCube::AxisCube(Vec c, double s) : corner(std::move(c)), side(s) {
  require(!corner.empty(), "cube needs d >= 1");
  require(s > 0.0 && std::isfinite(s), "cube side must be positive");
}

double AxisCube::diameter() const { return side * std::sqrt(static_cast<double>(dim())); }

Vec AxisCube::center() const {
  Vec c = corner;
  for (double& x : c) x += 0.5 * side;
  return c;
}

Ellipsoid::Ellipsoid(Vec c, Vec axes) : center(std::move(c)), semiaxes(std::move(axes)) {
  require(!center.empty(), "ellipsoid needs d >= 1");
  require(center.size() == semiaxes.size(), "ellipsoid semiaxes must match d");
  for (std::size_t j = 0; j < semiaxes.size(); ++j) {
    require(semiaxes[j] > 0.0, "ellipsoid semiaxes must be positive");
    if (j > 0) require(semiaxes[j] <= semiaxes[j - 1], "ellipsoid semiaxes must be nonincreasing");
  }
}

CubeUnion::CubeUnion(std::vector<AxisCube> cs) : cubes(std::move(cs)) {
  for (const auto& c : cubes) require_same_dim(c.dim(), cubes.front().dim());
}

double unit_ball_volume(std::size_t d) {
  const double h = 0.5 * static_cast<double>(d);
  return std::pow(std::numbers::pi, h) / std::tgamma(h + 1.0);
}

double volume(const Ball& b) {
  return unit_ball_volume(b.dim()) * std::pow(b.radius, static_cast<double>(b.dim()));
}

double volume(const AxisCube& c) { return std::pow(c.side, static_cast<double>(c.dim())); }

double volume(const Ellipsoid& e) {
  double p = unit_ball_volume(e.dim());
  for (double a : e.semiaxes) p *= a;
  return p;
}

double volume(const CubeUnion& u) {
  double v = 0.0;
  for (const auto& c : u.cubes) v += volume(c);
  return v;
}

double volume(const Shape& s) {
  return std::visit([](const auto& x) { return volume(x); }, s);
}

std::size_t dim(const Shape& s) {
  return std::visit([](const auto& x) { return x.dim(); }, s);
}

Box bounding_box(const Shape& s) {
  Box box;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Ball>) {
          box.lo = x.center;
          box.hi = x.center;
          for (std::size_t j = 0; j < x.dim(); ++j) {
            box.lo[j] -= x.radius;
            box.hi[j] += x.radius;
          }
        } else if constexpr (std::is_same_v<T, AxisCube>) {
          box.lo = x.corner;
          box.hi = x.corner;
          for (double& h : box.hi) h += x.side;
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          box.lo = x.center;
          box.hi = x.center;
          for (std::size_t j = 0; j < x.dim(); ++j) {
            box.lo[j] -= x.semiaxes[j];
            box.hi[j] += x.semiaxes[j];
          }
        } else {
          require(!x.empty(), "bounding box of an empty cube union");
          const std::size_t d = x.dim();
          box.lo.assign(d, INFINITY);
          box.hi.assign(d, -INFINITY);
          for (const auto& c : x.cubes) {
            for (std::size_t j = 0; j < d; ++j) {
              box.lo[j] = std::min(box.lo[j], c.corner[j]);
              box.hi[j] = std::max(box.hi[j], c.corner[j] + c.side);
            }
          }
        }
      },
      s);
  return box;
}

double diameter(const CubeUnion& u) {
  // Farthest pair of cube corners.
  double best = 0.0;
  for (const auto& a : u.cubes) {
    for (const auto& b : u.cubes) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < a.dim(); ++j) {
        const double lo = std::min(a.corner[j], b.corner[j]);
        const double hi = std::max(a.corner[j] + a.side, b.corner[j] + b.side);
        d2 += (hi - lo) * (hi - lo);
      }
      best = std::max(best, d2);
    }
  }
  return std::sqrt(best);
}

double diameter(const Shape& s) {
  return std::visit(
      [](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Ball>) return x.diameter();
        else if constexpr (std::is_same_v<T, AxisCube>) return x.diameter();
        else if constexpr (std::is_same_v<T, Ellipsoid>) return 2.0 * x.semiaxes.front();
        else return diameter(x);
      },
      s);
}

Ball scale_ball(const Ball& b, double m) {
  require(m > 0.0, "scale factor must be positive");
  return Ball(b.center, m * b.radius);
}

double distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(s);
}

double min_dist2(const AxisCube& c, const Vec& x) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double lo = c.corner[j];
    const double hi = lo + c.side;
    const double t = x[j] < lo ? lo - x[j] : (x[j] > hi ? x[j] - hi : 0.0);
    s += t * t;
  }
  return s;
}

double max_dist2(const AxisCube& c, const Vec& x) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double t = std::max(std::abs(x[j] - c.corner[j]), std::abs(c.corner[j] + c.side - x[j]));
    s += t * t;
  }
  return s;
}

bool point_in(const AxisCube& c, const Vec& x) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!approx_le(c.corner[j], x[j]) || !approx_le(x[j], c.corner[j] + c.side)) return false;
  }
  return true;
}

bool point_in(const Ball& b, const Vec& x) { return approx_le(distance(b.center, x), b.radius); }

bool contains(const Ball& outer, const Ball& inner) {
  require_same_dim(outer.dim(), inner.dim());
  const double lhs = distance(outer.center, inner.center) + inner.radius;
  const double scale = std::max(max_abs(outer.center), outer.radius);
  return lhs <= outer.radius + kUlps * std::max(scale, 1e-300);
}

bool contains(const Ball& outer, const AxisCube& inner) {
  require_same_dim(outer.dim(), inner.dim());
  const double far = std::sqrt(max_dist2(inner, outer.center));
  const double scale = std::max(max_abs(outer.center), outer.radius);
  return far <= outer.radius + kUlps * std::max(scale, 1e-300);
}

bool contains(const AxisCube& outer, const Ball& inner) {
  require_same_dim(outer.dim(), inner.dim());
  for (std::size_t j = 0; j < outer.dim(); ++j) {
    if (!approx_le(outer.corner[j], inner.center[j] - inner.radius)) return false;
    if (!approx_le(inner.center[j] + inner.radius, outer.corner[j] + outer.side)) return false;
  }
  return true;
}

bool contains(const AxisCube& outer, const AxisCube& inner) {
  require_same_dim(outer.dim(), inner.dim());
  for (std::size_t j = 0; j < outer.dim(); ++j) {
    if (!approx_le(outer.corner[j], inner.corner[j])) return false;
    if (!approx_le(inner.corner[j] + inner.side, outer.corner[j] + outer.side)) return false;
  }
  return true;
}

bool contains(const Ball& outer, const CubeUnion& inner) {
  return std::all_of(inner.cubes.begin(), inner.cubes.end(),
                     [&](const AxisCube& c) { return contains(outer, c); });
}

bool contains(const AxisCube& outer, const CubeUnion& inner) {
  return std::all_of(inner.cubes.begin(), inner.cubes.end(),
                     [&](const AxisCube& c) { return contains(outer, c); });
}

bool contains(const Ball& outer, const Ellipsoid& inner) {
  // Axis-aligned ellipsoid inside a ball: sufficient test via the farthest
  // point along the largest semiaxis from the ball center.
  require_same_dim(outer.dim(), inner.dim());
  const double reach = distance(outer.center, inner.center) + inner.semiaxes.front();
  const double scale = std::max(max_abs(outer.center), outer.radius);
  return reach <= outer.radius + kUlps * std::max(scale, 1e-300);
}

bool contains(const Ball& outer, const Shape& inner) {
  return std::visit([&](const auto& x) { return contains(outer, x); }, inner);
}

bool contains(const AxisCube& outer, const Shape& inner) {
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Ellipsoid>) {
          const Box b = bounding_box(Shape{x});
          for (std::size_t j = 0; j < x.dim(); ++j) {
            if (!approx_le(outer.corner[j], b.lo[j]) || !approx_le(b.hi[j], outer.corner[j] + outer.side))
              return false;
          }
          return true;
        } else {
          return contains(outer, x);
        }
      },
      inner);
}

bool disjoint(const Ball& a, const Ball& b) {
  require_same_dim(a.dim(), b.dim());
  return distance(a.center, b.center) > a.radius + b.radius;
}

std::vector<AxisCube> subdivide(const AxisCube& c, double target_diam) {
  require(target_diam > 0.0, "subdivision target must be positive");
  const double diam = c.diameter();
  require(approx_le(target_diam, diam), "component smaller than the subdivision target");
  const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(diam / target_diam * (1.0 - 1e-12))));
  const std::size_t d = c.dim();
  const double step = c.side / static_cast<double>(k);
  std::size_t total = 1;
  for (std::size_t j = 0; j < d; ++j) total *= k;
  std::vector<AxisCube> out;
  out.reserve(total);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Vec corner(d);
    for (std::size_t j = 0; j < d; ++j) {
      corner[j] = c.corner[j] + static_cast<double>(idx[j]) * step;
    }
    out.emplace_back(std::move(corner), step);
    for (std::size_t j = 0; j < d; ++j) {
      if (++idx[j] < k) break;
      idx[j] = 0;
    }
  }
  return out;
}

CubeUnion subdivide(const CubeUnion& u, double target_diam) {
  std::vector<AxisCube> out;
  for (const auto& c : u.cubes) {
    auto parts = subdivide(c, target_diam);
    out.insert(out.end(), std::make_move_iterator(parts.begin()), std::make_move_iterator(parts.end()));
  }
  return CubeUnion(std::move(out));
}

bool interiors_meet(const AxisCube& a, const AxisCube& b) {
  for (std::size_t j = 0; j < a.dim(); ++j) {
    if (a.corner[j] + a.side <= b.corner[j] || b.corner[j] + b.side <= a.corner[j]) return false;
  }
  return true;
}

namespace {

// Antiderivative of sqrt(R^2 - x^2) on [-R, R].
double half_disk_primitive(double x, double R) {
  x = std::clamp(x, -R, R);
  return 0.5 * (x * std::sqrt(std::max(0.0, R * R - x * x)) + R * R * std::asin(x / R));
}

double chord_integral(double a, double b, double R) {
  if (b <= a) return 0.0;
  return half_disk_primitive(b, R) - half_disk_primitive(a, R);
}

// Area of {x <= X, y <= Y} inside the disk of radius R centred at 0.
double disk_quadrant_area(double X, double Y, double R) {
  if (X <= -R || Y <= -R) return 0.0;
  X = std::min(X, R);
  if (Y >= R) return 2.0 * chord_integral(-R, X, R);
  const double w = std::sqrt(std::max(0.0, R * R - Y * Y));
  if (Y >= 0.0) {
    // |x| <= w: chord clipped at Y; |x| > w: full chord.
    double area = 0.0;
    area += 2.0 * chord_integral(-R, std::min(X, -w), R);
    const double lo = -w;
    const double hi = std::min(X, w);
    if (hi > lo) area += chord_integral(lo, hi, R) + Y * (hi - lo);
    if (X > w) area += 2.0 * chord_integral(w, X, R);
    return area;
  }
  // Y < 0: only |x| < w contributes, height Y + sqrt(R^2 - x^2).
  const double hi = std::min(X, w);
  if (hi <= -w) return 0.0;
  return chord_integral(-w, hi, R) + Y * (hi + w);
}

double disk_rect_area(double cx, double cy, double R, double x0, double x1, double y0, double y1) {
  x0 -= cx;
  x1 -= cx;
  y0 -= cy;
  y1 -= cy;
  const double a = disk_quadrant_area(x1, y1, R) - disk_quadrant_area(x0, y1, R) -
                   disk_quadrant_area(x1, y0, R) + disk_quadrant_area(x0, y0, R);
  return std::clamp(a, 0.0, (x1 - x0) * (y1 - y0));
}

double overlap_rec(const Vec& x, double r, const Vec& lo, const Vec& hi, std::size_t axis) {
  const std::size_t d = x.size();
  if (d - axis == 1) {
    return std::max(0.0, std::min(hi[axis], x[axis] + r) - std::max(lo[axis], x[axis] - r));
  }
  if (d - axis == 2) {
    return disk_rect_area(x[axis], x[axis + 1], r, lo[axis], hi[axis], lo[axis + 1], hi[axis + 1]);
  }
  const double a = std::max(lo[axis], x[axis] - r);
  const double b = std::min(hi[axis], x[axis] + r);
  if (b <= a) return 0.0;
  // Composite 8-point Gauss-Legendre over the slab, integrand = lower-dim overlap.
  static constexpr std::array<double, 4> nodes{0.1834346424956498, 0.5255324099163290,
                                                0.7966664774136267, 0.9602898564975363};
  static constexpr std::array<double, 4> weights{0.3626837833783620, 0.3137066458778873,
                                                  0.2223810344533745, 0.1012285362903763};
  constexpr int kPanels = 8;
  const double h = (b - a) / kPanels;
  double total = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      for (double sgn : {-1.0, 1.0}) {
        const double t = mid + sgn * nodes[q] * 0.5 * h;
        const double dz = t - x[axis];
        const double rr = std::sqrt(std::max(0.0, r * r - dz * dz));
        if (rr > 0.0) total += weights[q] * 0.5 * h * overlap_rec(x, rr, lo, hi, axis + 1);
      }
    }
  }
  return total;
}

}  // namespace

double ball_cube_overlap(const Vec& x, double r, const AxisCube& c) {
  if (r <= 0.0) return 0.0;
  if (min_dist2(c, x) >= r * r) return 0.0;
  if (max_dist2(c, x) <= r * r) return volume(c);
  Vec lo = c.corner;
  Vec hi = c.corner;
  for (double& h : hi) h += c.side;
  return std::clamp(overlap_rec(x, r, lo, hi, 0), 0.0, volume(c));
}

}  // namespace limsup
