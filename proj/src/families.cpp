#include "limsup/families.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "limsup/geom_io.hpp"

namespace limsup {

namespace {

constexpr double kMargin = 1.0 - 1.0 / 64.0;
constexpr std::uint64_t kMaxDirichletQ = std::uint64_t{1} << 20;

AxisCube shrink(const AxisCube& c, double factor) {
  Vec corner = c.corner;
  const double side = c.side * factor;
  for (double& x : corner) x += 0.5 * (c.side - side);
  return AxisCube(std::move(corner), side);
}

CubeUnion shrink_all(const CubeUnion& u) {
  std::vector<AxisCube> out;
  for (const auto& c : u.cubes) out.push_back(shrink(c, kMargin));
  return CubeUnion(std::move(out));
}

AxisCube interval(double lo, double hi) {
  // Below a few dozen ulps the interval cannot be subdivided or measured reliably.
  if (!(hi - lo > 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi)))) {
    throw Error(ErrorCode::RasterEmpty, "interval is below floating-point resolution");
  }
  return AxisCube({lo}, hi - lo);
}

// Open cusp {0 < u < delta, |v_j| < u^gamma}, u measured from the apex along axis 0.
struct Cusp {
  Vec apex;
  double delta = 0.0;
  double gamma = 1.0;
};

Cusp make_cusp(const Ball& b, double gamma) {
  const std::size_t d = b.dim();
  double delta = 2.0 * b.radius;
  const double dm1 = static_cast<double>(d - 1);
  while (0.25 * delta * delta + dm1 * std::pow(delta, 2.0 * gamma) > b.radius * b.radius * (1.0 - 1e-12)) {
    delta *= 0.99;
  }
  Cusp c;
  c.apex = b.center;
  c.apex[0] -= 0.5 * delta;
  c.delta = delta;
  c.gamma = gamma;
  return c;
}

// Cube classification against an open shape: +1 inside, -1 disjoint, 0 unknown.
using Classifier = std::function<int(const Vec& lo, const Vec& hi)>;

Classifier ellipsoid_classifier(const Vec& center, const Vec& axes) {
  return [center, axes](const Vec& lo, const Vec& hi) {
    double far = 0.0;
    double near = 0.0;
    for (std::size_t j = 0; j < center.size(); ++j) {
      const double a = (lo[j] - center[j]) / axes[j];
      const double b = (hi[j] - center[j]) / axes[j];
      far += std::max(a * a, b * b);
      const double n = a > 0.0 ? a : (b < 0.0 ? b : 0.0);
      near += n * n;
    }
    if (far < 1.0) return 1;
    if (near >= 1.0) return -1;
    return 0;
  };
}

Classifier cusp_classifier(const Cusp& c) {
  return [c](const Vec& lo, const Vec& hi) {
    const double u0 = lo[0] - c.apex[0];
    const double u1 = hi[0] - c.apex[0];
    if (u1 <= 0.0 || u0 >= c.delta) return -1;
    double vmax = 0.0;
    double vmin = 0.0;
    for (std::size_t j = 1; j < c.apex.size(); ++j) {
      const double a = lo[j] - c.apex[j];
      const double b = hi[j] - c.apex[j];
      vmax = std::max({vmax, std::abs(a), std::abs(b)});
      vmin = std::max(vmin, a > 0.0 ? a : (b < 0.0 ? -b : 0.0));
    }
    if (vmin >= std::pow(std::min(u1, c.delta), c.gamma)) return -1;
    if (u0 > 0.0 && u1 < c.delta && vmax < std::pow(u0, c.gamma)) return 1;
    return 0;
  };
}

CubeUnion raster_box(const Box& box, double min_cell, const Classifier& cls) {
  const std::size_t d = box.lo.size();
  double extent = 0.0;
  for (std::size_t j = 0; j < d; ++j) extent = std::max(extent, box.hi[j] - box.lo[j]);
  const int level0 = std::max(0, static_cast<int>(std::floor(-std::log2(extent))));
  const double side0 = std::ldexp(1.0, -level0);
  std::vector<AxisCube> out;
  std::function<void(const AxisCube&)> rec = [&](const AxisCube& q) {
    Vec hi = q.corner;
    for (double& x : hi) x += q.side;
    const int k = cls(q.corner, hi);
    if (k > 0) {
      out.push_back(q);
      return;
    }
    if (k < 0 || q.side <= min_cell) return;
    const double half = 0.5 * q.side;
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
      Vec corner = q.corner;
      for (std::size_t j = 0; j < d; ++j) {
        if (mask & (std::size_t{1} << j)) corner[j] += half;
      }
      rec(AxisCube(std::move(corner), half));
    }
  };
  std::vector<long long> first(d);
  std::vector<long long> last(d);
  for (std::size_t j = 0; j < d; ++j) {
    first[j] = static_cast<long long>(std::floor(box.lo[j] / side0));
    last[j] = static_cast<long long>(std::ceil(box.hi[j] / side0)) - 1;
  }
  std::vector<long long> idx = first;
  while (true) {
    Vec corner(d);
    for (std::size_t j = 0; j < d; ++j) corner[j] = static_cast<double>(idx[j]) * side0;
    rec(AxisCube(std::move(corner), side0));
    std::size_t j = 0;
    for (; j < d; ++j) {
      if (++idx[j] <= last[j]) break;
      idx[j] = first[j];
    }
    if (j == d) break;
  }
  return CubeUnion(std::move(out));
}

CubeUnion raster_cusp(const Cusp& c, double min_cell) {
  const std::size_t d = c.apex.size();
  Box box{c.apex, c.apex};
  box.hi[0] += c.delta;
  const double w = std::pow(c.delta, c.gamma);
  for (std::size_t j = 1; j < d; ++j) {
    box.lo[j] -= w;
    box.hi[j] += w;
  }
  return raster_box(box, min_cell, cusp_classifier(c));
}

CubeUnion make_dust(const Ball& b, std::size_t k, double t) {
  const std::size_t d = b.dim();
  const double S = 2.0 * b.radius / std::sqrt(static_cast<double>(d));
  const double P = S / static_cast<double>(k);
  std::size_t total = 1;
  for (std::size_t j = 0; j < d; ++j) total *= k;
  std::vector<AxisCube> cubes;
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Vec corner(d);
    for (std::size_t j = 0; j < d; ++j) {
      corner[j] = b.center[j] - 0.5 * S + (static_cast<double>(idx[j]) + 0.5) * P - 0.5 * t;
    }
    cubes.emplace_back(std::move(corner), t);
    for (std::size_t j = 0; j < d; ++j) {
      if (++idx[j] < k) break;
      idx[j] = 0;
    }
  }
  return CubeUnion(std::move(cubes));
}

CubeUnion dust_for(const Ball& b, std::size_t k, double s_target) {
  const std::size_t d = b.dim();
  const double P = 2.0 * b.radius / std::sqrt(static_cast<double>(d)) / static_cast<double>(k);
  const auto depth = static_cast<std::size_t>(std::clamp(std::ceil(-std::log2(P)) + 8.0, 4.0, 30.0));
  const double target = volume(b);
  auto content = [&](double t) { return content_dp(make_dust(b, k, t), s_target, depth).value; };
  double hi = P * kMargin;
  if (content(hi) < target) {
    throw Error(ErrorCode::Degenerate, "dust cannot reach the content target inside the ball");
  }
  double lo = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (content(mid) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return make_dust(b, k, hi);
}

}  // namespace

ShapeRule ShapeRule::concentric_ball(double a) {
  ShapeRule r;
  r.kind = Kind::ConcentricBall;
  r.a = a;
  return r;
}

ShapeRule ShapeRule::ellipsoid(Vec a) {
  ShapeRule r;
  r.kind = Kind::Ellipsoid;
  r.avec = std::move(a);
  return r;
}

ShapeRule ShapeRule::dust(std::size_t k, double s_target) {
  ShapeRule r;
  r.kind = Kind::Dust;
  r.k = k;
  r.s_target = s_target;
  return r;
}

ShapeRule ShapeRule::cusp(double gamma) {
  ShapeRule r;
  r.kind = Kind::Cusp;
  r.gamma = gamma;
  return r;
}

void ShapeRule::validate(std::size_t d) const {
  switch (kind) {
    case Kind::ConcentricBall:
      require(a >= 1.0, "concentric exponent a must be >= 1");
      break;
    case Kind::Ellipsoid:
      require(avec.size() == d, "ellipsoid exponent vector must have length d");
      require(avec.front() >= 1.0, "ellipsoid exponents must be >= 1");
      for (std::size_t j = 1; j < avec.size(); ++j) require(avec[j] >= avec[j - 1], "ellipsoid exponents must be nondecreasing");
      break;
    case Kind::Dust:
      require(k >= 1, "dust needs k >= 1");
      require(s_target > 0.0 && s_target <= static_cast<double>(d), "dust s_target must lie in (0, d]");
      break;
    case Kind::Cusp:
      require(gamma >= 1.0, "cusp exponent must be >= 1");
      break;
  }
}

CubeUnion rasterize(const Shape& shape, double min_cell) {
  require(min_cell > 0.0, "raster cell size must be positive");
  return std::visit(
      [&](const auto& sh) -> CubeUnion {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, Ball>) {
          const Box box = bounding_box(Shape(sh));
          return raster_box(box, min_cell, ellipsoid_classifier(sh.center, Vec(sh.dim(), sh.radius)));
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          const Box box = bounding_box(Shape(sh));
          return raster_box(box, min_cell, ellipsoid_classifier(sh.center, sh.semiaxes));
        } else if constexpr (std::is_same_v<T, AxisCube>) {
          return CubeUnion({shrink(sh, kMargin)});
        } else {
          return shrink_all(sh);
        }
      },
      shape);
}

ShapePair attach_shape(const Ball& ball, std::size_t index, const ShapeRule& rule) {
  const std::size_t d = ball.dim();
  rule.validate(d);
  ShapePair p;
  p.ball = ball;
  p.index = index;
  const double diam = ball.diameter();
  CubeUnion support;
  switch (rule.kind) {
    case ShapeRule::Kind::ConcentricBall: {
      const Ball e(ball.center, 0.5 * std::pow(diam, rule.a));
      p.shape = e;
      if (d == 1) {
        support = CubeUnion({shrink(interval(e.center[0] - e.radius, e.center[0] + e.radius), kMargin)});
      } else {
        support = rasterize(e, e.radius / 8.0);
      }
      break;
    }
    case ShapeRule::Kind::Ellipsoid: {
      Vec axes(d);
      for (std::size_t j = 0; j < d; ++j) axes[j] = 0.5 * std::pow(diam, rule.avec[j]);
      const Ellipsoid e(ball.center, axes);
      p.shape = e;
      if (d == 1) {
        support = CubeUnion({shrink(interval(e.center[0] - axes[0], e.center[0] + axes[0]), kMargin)});
      } else {
        support = rasterize(e, axes.back() / 8.0);
      }
      break;
    }
    case ShapeRule::Kind::Dust: {
      CubeUnion dust = dust_for(ball, rule.k, rule.s_target);
      support = shrink_all(dust);
      p.shape = std::move(dust);
      break;
    }
    case ShapeRule::Kind::Cusp: {
      const Cusp c = make_cusp(ball, rule.gamma);
      CubeUnion raster;
      if (d == 1) {
        raster = CubeUnion({interval(c.apex[0], c.apex[0] + c.delta)});
      } else {
        raster = raster_cusp(c, std::min(c.delta, 2.0 * std::pow(c.delta, c.gamma)) / 16.0);
      }
      support = shrink_all(raster);
      p.shape = std::move(raster);
      break;
    }
  }
  if (support.empty()) throw Error(ErrorCode::RasterEmpty, "shape is below raster resolution");
  require(contains(ball, p.shape), "shape escapes its ball");
  p.smoothed = uniform_on(support);
  return p;
}

std::vector<ShapePair> attach_shapes(const std::vector<Ball>& balls, const ShapeRule& rule) {
  std::vector<ShapePair> out;
  out.reserve(balls.size());
  for (std::size_t i = 0; i < balls.size(); ++i) out.push_back(attach_shape(balls[i], i + 1, rule));
  return out;
}

std::vector<Ball> gen_balls(const FamilySpec& spec) {
  require(spec.count >= 1, "family count must be positive");
  require(spec.d >= 1, "dimension must be positive");
  std::vector<Ball> out;
  switch (spec.kind) {
    case FamilyKind::RandomCover: {
      require(spec.c > 0.0, "radius constant must be positive");
      std::mt19937_64 rng(spec.seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const double dd = static_cast<double>(spec.d);
      for (std::size_t i = 1; i <= spec.count; ++i) {
        const double r = std::min(0.5, spec.c * std::pow(static_cast<double>(i), -1.0 / dd));
        Vec center(spec.d);
        for (double& x : center) x = r + (1.0 - 2.0 * r) * unit(rng);
        out.emplace_back(std::move(center), r);
      }
      break;
    }
    case FamilyKind::Dirichlet: {
      if (spec.d != 1) throw Error(ErrorCode::Unsupported, "dirichlet family is one-dimensional");
      for (std::uint64_t q = 2; out.size() < spec.count; ++q) {
        for (std::uint64_t p = 1; p < q && out.size() < spec.count; ++p) {
          if (std::gcd(p, q) != 1) continue;
          const double qq = static_cast<double>(q);
          out.emplace_back(Vec{static_cast<double>(p) / qq}, 1.0 / (qq * qq));
        }
      }
      break;
    }
    case FamilyKind::Explicit: {
      for (const auto& p : read_family_jsonl(spec.path)) out.push_back(p.ball);
      break;
    }
  }
  return out;
}

CoverageReport verify_full_measure(const std::vector<Ball>& balls, std::size_t depth,
                                   std::vector<std::size_t> cutoffs, double tolerance) {
  CoverageReport rep;
  rep.depth = depth;
  rep.tolerance = tolerance;
  const std::size_t n = balls.size();
  if (cutoffs.empty()) cutoffs = {0, n / 16, n / 8, n / 4};
  rep.cutoffs = cutoffs;
  if (n == 0) {
    rep.coverage.assign(cutoffs.size(), 0.0);
    return rep;
  }
  const std::size_t d = balls.front().dim();
  require(depth >= 1 && static_cast<double>(depth * d) <= 26.0, "grid too fine for verify_full_measure");
  const std::size_t side = std::size_t{1} << depth;
  std::size_t total = 1;
  for (std::size_t j = 0; j < d; ++j) total *= side;
  const double h = 1.0 / static_cast<double>(side);
  std::vector<std::uint32_t> last(total, 0);  // largest 1-based ball index covering the point
  for (std::size_t i = 0; i < n; ++i) {
    const Ball& b = balls[i];
    std::vector<long long> lo(d);
    std::vector<long long> hi(d);
    bool empty = false;
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = std::max<long long>(0, static_cast<long long>(std::ceil((b.center[j] - b.radius) / h - 0.5)));
      hi[j] = std::min<long long>(static_cast<long long>(side) - 1,
                                  static_cast<long long>(std::floor((b.center[j] + b.radius) / h - 0.5)));
      empty = empty || hi[j] < lo[j];
    }
    if (empty) continue;
    std::vector<long long> idx = lo;
    const double r2 = b.radius * b.radius;
    while (true) {
      double dist2 = 0.0;
      std::size_t flat = 0;
      for (std::size_t j = d; j-- > 0;) {
        const double t = (static_cast<double>(idx[j]) + 0.5) * h - b.center[j];
        dist2 += t * t;
        flat = flat * side + static_cast<std::size_t>(idx[j]);
      }
      if (dist2 <= r2) last[flat] = static_cast<std::uint32_t>(i + 1);
      std::size_t j = 0;
      for (; j < d; ++j) {
        if (++idx[j] <= hi[j]) break;
        idx[j] = lo[j];
      }
      if (j == d) break;
    }
  }
  rep.pass = true;
  for (std::size_t cut : cutoffs) {
    std::size_t covered = 0;
    for (auto v : last) covered += v > cut ? 1 : 0;
    const double frac = static_cast<double>(covered) / static_cast<double>(total);
    rep.coverage.push_back(frac);
    rep.pass = rep.pass && frac >= 1.0 - tolerance;
  }
  return rep;
}

Family::Family(FamilySpec spec) : spec_(std::move(spec)) {
  spec_.rule.validate(spec_.d);
  if (spec_.kind == FamilyKind::Explicit) {
    for (auto& p : read_family_jsonl(spec_.path, &spec_.rule)) {
      balls_.push_back(p.ball);
      const std::size_t idx = balls_.size();
      p.index = idx;
      cache_.emplace(idx, std::move(p));
    }
    spec_.count = balls_.size();
    if (!balls_.empty()) spec_.d = balls_.front().dim();
  } else {
    balls_ = gen_balls(spec_);
  }
}

Family::Family(FamilySpec spec, std::vector<ShapePair> pairs) : spec_(std::move(spec)) {
  require(!pairs.empty(), "explicit family is empty");
  spec_.kind = FamilyKind::Explicit;
  spec_.count = pairs.size();
  spec_.d = pairs.front().ball.dim();
  for (auto& p : pairs) {
    balls_.push_back(p.ball);
    p.index = balls_.size();
    cache_.emplace(p.index, std::move(p));
  }
}

std::vector<Ball> Family::balls() const { return balls_; }

void Family::grow_totients(std::uint64_t q) const {
  if (q < phi_.size()) return;
  if (q > kMaxDirichletQ) throw Error(ErrorCode::DepthUnreachable, "dirichlet enumeration exceeds q = 2^20");
  const std::uint64_t n = std::min<std::uint64_t>(kMaxDirichletQ, std::max<std::uint64_t>(2 * q, 1024)) + 1;
  phi_.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) phi_[i] = static_cast<std::uint32_t>(i);
  for (std::uint64_t i = 2; i < n; ++i) {
    if (phi_[i] != i) continue;
    for (std::uint64_t j = i; j < n; j += i) phi_[j] -= phi_[j] / static_cast<std::uint32_t>(i);
  }
  phi_prefix_.assign(n, 0);
  for (std::uint64_t i = 3; i < n; ++i) phi_prefix_[i] = phi_prefix_[i - 1] + phi_[i - 1];
}

std::size_t Family::dirichlet_index(std::uint64_t p, std::uint64_t q) const {
  grow_totients(q);
  // Count t <= p coprime to q by inclusion-exclusion over the primes of q.
  std::vector<std::uint64_t> primes;
  std::uint64_t m = q;
  for (std::uint64_t f = 2; f * f <= m; ++f) {
    if (m % f != 0) continue;
    primes.push_back(f);
    while (m % f == 0) m /= f;
  }
  if (m > 1) primes.push_back(m);
  long long rank = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << primes.size()); ++mask) {
    std::uint64_t prod = 1;
    int bits = 0;
    for (std::size_t i = 0; i < primes.size(); ++i) {
      if (mask & (std::size_t{1} << i)) {
        prod *= primes[i];
        ++bits;
      }
    }
    const auto term = static_cast<long long>(p / prod);
    rank += bits % 2 == 0 ? term : -term;
  }
  return static_cast<std::size_t>(phi_prefix_[q]) + static_cast<std::size_t>(rank);
}

std::vector<std::pair<std::size_t, Ball>> Family::candidates(const AxisCube& cube, std::size_t after,
                                                             double max_diam, double volume_target,
                                                             std::size_t max_count) const {
  std::vector<std::pair<std::size_t, Ball>> out;
  double vol = 0.0;
  if (spec_.kind != FamilyKind::Dirichlet) {
    for (std::size_t i = after; i < balls_.size(); ++i) {
      const Ball& b = balls_[i];
      if (b.diameter() > max_diam || !contains(cube, b)) continue;
      out.emplace_back(i + 1, b);
      vol += volume(b);
      if (vol >= volume_target || out.size() >= max_count) break;
    }
    return out;
  }
  require(cube.dim() == 1, "dirichlet family is one-dimensional");
  const double a = cube.corner[0];
  const double bnd = a + cube.side;
  auto q0 = static_cast<std::uint64_t>(std::max(2.0, std::ceil(std::sqrt(2.0 / max_diam) - 1e-9)));
  const std::uint64_t qmax = std::min<std::uint64_t>(kMaxDirichletQ, 64 * q0);
  if (q0 > kMaxDirichletQ) throw Error(ErrorCode::DepthUnreachable, "dirichlet enumeration exceeds q = 2^20");
  for (std::uint64_t q = q0; q <= qmax; ++q) {
    const double qq = static_cast<double>(q);
    const double r = 1.0 / (qq * qq);
    if (2.0 * r > max_diam) continue;
    const auto p_lo = static_cast<std::uint64_t>(std::max(1.0, std::ceil((a + r) * qq - 1e-9)));
    const auto p_hi = static_cast<std::uint64_t>(std::max(0.0, std::floor((bnd - r) * qq + 1e-9)));
    for (std::uint64_t p = p_lo; p <= p_hi && p < q; ++p) {
      if (std::gcd(p, q) != 1) continue;
      Ball b(Vec{static_cast<double>(p) / qq}, r);
      if (!contains(cube, b)) continue;
      const std::size_t idx = dirichlet_index(p, q);
      if (idx <= after) continue;
      out.emplace_back(idx, std::move(b));
      vol += 2.0 * r;
      if (vol >= volume_target || out.size() >= max_count) return out;
    }
  }
  return out;
}

const ShapePair& Family::pair(std::size_t index, const Ball& ball) const {
  auto it = cache_.find(index);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(index, attach_shape(ball, index, spec_.rule)).first->second;
}

std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::RandomCover:
      return "random_cover";
    case FamilyKind::Dirichlet:
      return "dirichlet";
    case FamilyKind::Explicit:
      return "explicit";
  }
  return "unknown";
}

FamilyKind family_kind_from_string(const std::string& s) {
  if (s == "random_cover" || s == "random") return FamilyKind::RandomCover;
  if (s == "dirichlet") return FamilyKind::Dirichlet;
  if (s == "explicit") return FamilyKind::Explicit;
  throw Error(ErrorCode::PreViolation, "unknown family kind: " + s);
}

nlohmann::json to_json(const ShapeRule& r) {
  switch (r.kind) {
    case ShapeRule::Kind::ConcentricBall:
      return {{"kind", "concentric_ball"}, {"a", r.a}};
    case ShapeRule::Kind::Ellipsoid:
      return {{"kind", "ellipsoid"}, {"a", r.avec}};
    case ShapeRule::Kind::Dust:
      return {{"kind", "dust"}, {"k", r.k}, {"s_target", r.s_target}};
    case ShapeRule::Kind::Cusp:
      return {{"kind", "cusp"}, {"gamma", r.gamma}};
  }
  return {};
}

ShapeRule shape_rule_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "concentric_ball") return ShapeRule::concentric_ball(j.at("a").get<double>());
  if (kind == "ellipsoid") return ShapeRule::ellipsoid(j.at("a").get<Vec>());
  if (kind == "dust") return ShapeRule::dust(j.at("k").get<std::size_t>(), j.at("s_target").get<double>());
  if (kind == "cusp") return ShapeRule::cusp(j.at("gamma").get<double>());
  throw Error(ErrorCode::PreViolation, "unknown shape rule: " + kind);
}

ShapeRule parse_shape_rule(const std::string& text) {
  const auto colon = text.find(':');
  require(colon != std::string::npos, "shape rule must look like name:params");
  const std::string name = text.substr(0, colon);
  Vec args;
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      args.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::PreViolation, "bad shape rule parameter: " + item);
    }
  }
  require(!args.empty(), "shape rule needs parameters");
  if (name == "concentric" || name == "concentric_ball") return ShapeRule::concentric_ball(args.at(0));
  if (name == "ellipsoid") return ShapeRule::ellipsoid(args);
  if (name == "dust") {
    require(args.size() == 2 && args[0] >= 1.0, "dust rule is dust:k,s_target");
    return ShapeRule::dust(static_cast<std::size_t>(args[0]), args[1]);
  }
  if (name == "cusp") return ShapeRule::cusp(args.at(0));
  throw Error(ErrorCode::PreViolation, "unknown shape rule: " + name);
}

nlohmann::json to_json(const ShapePair& p) {
  nlohmann::json j;
  j["index"] = p.index;
  j["ball"] = to_json(Shape(p.ball));
  j["shape"] = to_json(p.shape);
  j["support"] = to_json(Shape(p.smoothed.support));
  j["density_bound"] = p.smoothed.density_bound;
  return j;
}

ShapePair shape_pair_from_json(const nlohmann::json& j) {
  ShapePair p;
  p.index = j.value("index", std::size_t{0});
  const Shape ball = shape_from_json(j.at("ball"));
  require(std::holds_alternative<Ball>(ball), "pair ball must be a ball");
  p.ball = std::get<Ball>(ball);
  p.shape = j.contains("shape") ? shape_from_json(j.at("shape")) : Shape(p.ball);
  const Shape support = shape_from_json(j.at("support"));
  require(std::holds_alternative<CubeUnion>(support), "pair support must be a cube union");
  p.smoothed = uniform_on(std::get<CubeUnion>(support));
  return p;
}

void write_family_jsonl(const std::string& path, const std::vector<ShapePair>& pairs) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  for (const auto& p : pairs) out << to_json(p).dump() << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

std::vector<ShapePair> read_family_jsonl(const std::string& path, const ShapeRule* rule) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::vector<ShapePair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Io, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("spec")) continue;
    const std::size_t index = out.size() + 1;
    if (j.contains("support")) {
      ShapePair p = shape_pair_from_json(j);
      p.index = index;
      out.push_back(std::move(p));
      continue;
    }
    const Shape s = shape_from_json(j.contains("ball") ? j.at("ball") : j);
    require(std::holds_alternative<Ball>(s), "family lines must hold balls");
    const Ball& b = std::get<Ball>(s);
    out.push_back(attach_shape(b, index, rule ? *rule : ShapeRule::concentric_ball(1.0)));
  }
  if (out.empty()) throw Error(ErrorCode::Io, "family file " + path + " is empty");
  return out;
}

nlohmann::json to_json(const FamilySpec& spec) {
  nlohmann::json j = {{"kind", to_string(spec.kind)},
                      {"d", spec.d},
                      {"rule", to_json(spec.rule)},
                      {"count", spec.count},
                      {"seed", spec.seed},
                      {"c", spec.c}};
  if (!spec.path.empty()) j["path"] = spec.path;
  return j;
}

FamilySpec family_spec_from_json(const nlohmann::json& j) {
  try {
    FamilySpec spec;
    spec.kind = family_kind_from_string(j.at("kind").get<std::string>());
    spec.d = j.at("d").get<std::size_t>();
    spec.rule = shape_rule_from_json(j.at("rule"));
    spec.count = j.at("count").get<std::size_t>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.c = j.value("c", 2.0);
    spec.path = j.value("path", std::string());
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("malformed family spec: ") + e.what());
  }
}

std::optional<FamilySpec> read_family_header(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.contains("spec")) return family_spec_from_json(j.at("spec"));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Io, path + ": " + e.what());
    }
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace limsup
