#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "limsup/content.hpp"
#include "limsup/families.hpp"

using namespace limsup;

namespace {

struct UnionMeasure {
  double measure = 0.0;
  std::size_t components = 0;
};

// Exact Lebesgue measure of a union of intervals clipped to [0,1].
UnionMeasure interval_union(std::vector<Ball> balls) {
  std::vector<std::pair<double, double>> iv;
  for (const auto& b : balls) {
    const double lo = std::max(0.0, b.center[0] - b.radius);
    const double hi = std::min(1.0, b.center[0] + b.radius);
    if (hi > lo) iv.emplace_back(lo, hi);
  }
  std::sort(iv.begin(), iv.end());
  UnionMeasure out;
  double cur_lo = -1.0, cur_hi = -1.0;
  for (const auto& [lo, hi] : iv) {
    if (lo > cur_hi) {
      if (cur_hi > cur_lo) out.measure += cur_hi - cur_lo;
      cur_lo = lo;
      cur_hi = hi;
      ++out.components;
    } else {
      cur_hi = std::max(cur_hi, hi);
    }
  }
  if (cur_hi > cur_lo) out.measure += cur_hi - cur_lo;
  return out;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("limsup_fam_" + name)).string();
}

}  // namespace

TEST_CASE("random cover is deterministic and sorted") {
  FamilySpec spec;
  spec.d = 1;
  spec.count = 100;
  spec.seed = 7;
  const auto a = gen_balls(spec);
  const auto b = gen_balls(spec);
  REQUIRE(a.size() == 100);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].center == b[i].center);
    CHECK(a[i].radius == b[i].radius);
    CHECK(a[i].center[0] - a[i].radius >= -1e-15);
    CHECK(a[i].center[0] + a[i].radius <= 1.0 + 1e-15);
    if (i > 0) CHECK(a[i].radius <= a[i - 1].radius);
  }
  // Large radii are clipped to the unit interval; the tail keeps 2/i.
  CHECK(a.back().radius <= 2.0 / 100.0 + 1e-15);
  spec.seed = 8;
  const auto c = gen_balls(spec);
  CHECK(c[50].center != a[50].center);
}

TEST_CASE("random cover in the square stays inside") {
  FamilySpec spec;
  spec.d = 2;
  spec.count = 500;
  spec.seed = 3;
  const AxisCube unit({0.0, 0.0}, 1.0);
  for (const auto& b : gen_balls(spec)) CHECK(contains(unit, b));
}

TEST_CASE("dirichlet enumeration") {
  FamilySpec spec;
  spec.kind = FamilyKind::Dirichlet;
  spec.count = 9;  // every reduced fraction with q <= 5
  const auto balls = gen_balls(spec);
  const std::vector<double> centers{1.0 / 2, 1.0 / 3, 2.0 / 3, 1.0 / 4, 3.0 / 4, 1.0 / 5, 2.0 / 5, 3.0 / 5, 4.0 / 5};
  const std::vector<double> radii{1.0 / 4, 1.0 / 9, 1.0 / 9, 1.0 / 16, 1.0 / 16, 1.0 / 25, 1.0 / 25, 1.0 / 25, 1.0 / 25};
  REQUIRE(balls.size() == centers.size());
  for (std::size_t i = 0; i < balls.size(); ++i) {
    CHECK(balls[i].center[0] == doctest::Approx(centers[i]));
    CHECK(balls[i].radius == doctest::Approx(radii[i]));
  }
  spec.d = 2;
  CHECK_THROWS_AS(gen_balls(spec), Error);
}

TEST_CASE("explicit family from an empty file") {
  const std::string path = temp_path("empty.jsonl");
  { std::ofstream out(path); }
  FamilySpec spec;
  spec.kind = FamilyKind::Explicit;
  spec.path = path;
  try {
    gen_balls(spec);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
  std::filesystem::remove(path);
}

TEST_CASE("concentric ball shape") {
  const ShapePair p = attach_shape(Ball({0.5}, 0.1), 1, ShapeRule::concentric_ball(2.0));
  const auto& e = std::get<Ball>(p.shape);
  CHECK(e.center[0] == 0.5);
  CHECK(e.diameter() == doctest::Approx(0.04));
  CHECK(contains(p.ball, p.shape));
  CHECK(contains(e, p.smoothed.support));
  CHECK(p.smoothed.measure.total() == doctest::Approx(1.0));
}

TEST_CASE("ellipsoid shape") {
  const ShapePair p = attach_shape(Ball({0.5, 0.5}, 0.05), 1, ShapeRule::ellipsoid({1.0, 2.0}));
  const auto& e = std::get<Ellipsoid>(p.shape);
  CHECK(e.semiaxes[0] == doctest::Approx(0.05));
  CHECK(e.semiaxes[1] == doctest::Approx(0.005));
  CHECK(contains(p.ball, p.shape));
  CHECK(contains(p.ball, p.smoothed.support));
  // The inner raster keeps most of the ellipse.
  CHECK(volume(p.smoothed.support) <= volume(e));
  CHECK(volume(p.smoothed.support) >= 0.6 * volume(e));
}

TEST_CASE("dust is sized by its content") {
  const Ball b({0.5}, 0.05);
  const ShapePair p = attach_shape(b, 1, ShapeRule::dust(4, 0.5));
  const auto& dust = std::get<CubeUnion>(p.shape);
  CHECK(dust.cubes.size() == 4);
  CHECK(contains(b, dust));
  const double c = content_dp(dust, 0.5, 12).value;
  CHECK(c >= 0.9 * volume(b));
  CHECK(c <= 1.1 * volume(b));
}

TEST_CASE("dust in the plane") {
  const Ball b({0.5, 0.5}, 0.1);
  const ShapePair p = attach_shape(b, 1, ShapeRule::dust(2, 1.2));
  const auto& dust = std::get<CubeUnion>(p.shape);
  CHECK(dust.cubes.size() == 4);
  CHECK(contains(b, dust));
}

TEST_CASE("cusp shape stays in its ball") {
  const Ball b({0.5, 0.5}, 0.1);
  const ShapePair p = attach_shape(b, 3, ShapeRule::cusp(2.0));
  CHECK(p.index == 3);
  CHECK(contains(b, p.shape));
  CHECK(contains(b, p.smoothed.support));
  CHECK(volume(p.smoothed.support) > 0.0);
}

TEST_CASE("shape rule validation") {
  CHECK_THROWS_AS(ShapeRule::concentric_ball(0.5).validate(1), Error);
  CHECK_THROWS_AS(ShapeRule::ellipsoid({2.0, 1.0}).validate(2), Error);
  CHECK_THROWS_AS(ShapeRule::ellipsoid({1.0, 2.0}).validate(3), Error);
  CHECK_THROWS_AS(ShapeRule::dust(0, 0.5).validate(1), Error);
  CHECK_THROWS_AS(ShapeRule::cusp(0.5).validate(2), Error);
  CHECK_NOTHROW(ShapeRule::cusp(1.0).validate(2));
}

TEST_CASE("raster below resolution") {
  try {
    attach_shape(Ball({0.5}, 1e-6), 1, ShapeRule::concentric_ball(3.0));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RasterEmpty);
  }
}

TEST_CASE("concentric exponent identity") {
  for (std::size_t d : {1u, 2u}) {
    for (double a : {1.0, 1.5, 2.0, 3.0}) {
      for (double r : {0.2, 0.05, 0.01}) {
        const ShapePair p = attach_shape(Ball(Vec(d, 0.5), r), 1, ShapeRule::concentric_ball(a));
        const double s = static_cast<double>(d) / a;
        const double diam = 2.0 * r;
        const double phi = phi_of_shape(p.shape, s);
        CHECK(phi == doctest::Approx(std::pow(diam, static_cast<double>(d)) * std::pow(2.0, -s)));
        CHECK(std::log(phi * std::pow(2.0, s)) / std::log(diam) == doctest::Approx(static_cast<double>(d)));
      }
    }
  }
}

TEST_CASE("rasterize keeps cells inside the shape") {
  const Ellipsoid e({0.5, 0.5}, {0.3, 0.1});
  const CubeUnion coarse = rasterize(e, 1.0 / 32);
  const CubeUnion fine = rasterize(e, 1.0 / 256);
  CHECK(contains(Ball({0.5, 0.5}, 0.3), coarse));
  CHECK(volume(coarse) <= volume(fine) + 1e-15);
  CHECK(volume(fine) <= volume(e));
  CHECK(volume(fine) >= 0.9 * volume(e));
  // Cells are dyadic and merged where possible, never finer than min_cell.
  for (const auto& c : fine.cubes) {
    CHECK(c.side >= 1.0 / 256 - 1e-15);
    CHECK(std::log2(c.side) == doctest::Approx(std::round(std::log2(c.side))));
  }
}

TEST_CASE("full measure on grid") {
  FamilySpec spec;
  spec.kind = FamilyKind::Dirichlet;
  spec.count = 773;  // q <= 50
  const auto dir = gen_balls(spec);
  REQUIRE(dir.back().center[0] == doctest::Approx(49.0 / 50));
  const CoverageReport rep = verify_full_measure(dir, 16, {0, 100, 200, 386});
  REQUIRE(rep.coverage.size() == 4);
  const double h = std::ldexp(1.0, -16);
  for (std::size_t k = 0; k < rep.cutoffs.size(); ++k) {
    const UnionMeasure exact = interval_union(std::vector<Ball>(dir.begin() + rep.cutoffs[k], dir.end()));
    CHECK(std::abs(rep.coverage[k] - exact.measure) <= 2.0 * h * exact.components + 1e-12);
  }
  // The exact union through q = 50 misses about 4% of [0,1], so this family
  // does not reach 0.99 coverage.
  CHECK(rep.coverage[0] == doctest::Approx(interval_union(dir).measure).epsilon(1e-3));
  CHECK(rep.coverage[0] < 0.97);
  CHECK_FALSE(rep.pass);

  FamilySpec rc;
  rc.d = 1;
  rc.count = 10000;
  rc.seed = 11;
  CHECK(verify_full_measure(gen_balls(rc), 12).pass);

  std::vector<Ball> left;
  for (int i = 0; i < 50; ++i) left.emplace_back(Vec{0.25}, 0.25);
  const CoverageReport bad = verify_full_measure(left, 10);
  CHECK_FALSE(bad.pass);
  CHECK(bad.coverage[0] == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("dirichlet family is lazy and indexable") {
  FamilySpec spec;
  spec.kind = FamilyKind::Dirichlet;
  spec.count = 20;
  spec.rule = ShapeRule::concentric_ball(2.0);
  const Family fam(spec);
  CHECK(fam.infinite());
  // Candidates inside [0.25, 0.5] of diameter <= 0.01: q >= 15.
  const auto cands = fam.candidates(AxisCube({0.25}, 0.25), 0, 0.01, 1e9, 20);
  REQUIRE(cands.size() == 20);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& [idx, b] = cands[i];
    CHECK(b.diameter() <= 0.01);
    CHECK(contains(AxisCube({0.25}, 0.25), b));
    if (i > 0) CHECK(idx > cands[i - 1].first);
    const ShapePair& p = fam.pair(idx, b);
    CHECK(p.index == idx);
    CHECK(contains(b, p.shape));
  }
  // The index agrees with a direct enumeration.
  spec.count = cands.back().first;
  const auto direct = gen_balls(spec);
  CHECK(direct.back().center[0] == doctest::Approx(cands.back().second.center[0]));
  CHECK(direct.back().radius == doctest::Approx(cands.back().second.radius));
}

TEST_CASE("family file round trip") {
  FamilySpec spec;
  spec.d = 2;
  spec.count = 12;
  spec.seed = 5;
  spec.rule = ShapeRule::ellipsoid({1.0, 1.5});
  const auto pairs = attach_shapes(gen_balls(spec), spec.rule);
  const std::string path = temp_path("rt.jsonl");
  write_family_jsonl(path, pairs);
  const auto back = read_family_jsonl(path);
  REQUIRE(back.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(back[i].index == pairs[i].index);
    CHECK(back[i].ball.center == pairs[i].ball.center);
    CHECK(back[i].ball.radius == pairs[i].ball.radius);
    CHECK(to_json(back[i]) == to_json(pairs[i]));
  }
  std::filesystem::remove(path);

  const FamilySpec again = family_spec_from_json(to_json(spec));
  CHECK(to_json(again) == to_json(spec));
}

TEST_CASE("shape rule text") {
  CHECK(parse_shape_rule("concentric:2").a == 2.0);
  const ShapeRule e = parse_shape_rule("ellipsoid:1,2");
  CHECK(e.kind == ShapeRule::Kind::Ellipsoid);
  CHECK(e.avec == Vec{1.0, 2.0});
  const ShapeRule d = parse_shape_rule("dust:4,0.5");
  CHECK(d.k == 4);
  CHECK(d.s_target == 0.5);
  CHECK(parse_shape_rule("cusp:2").gamma == 2.0);
  CHECK_THROWS_AS(parse_shape_rule("blob:1"), Error);
  CHECK(family_kind_from_string(to_string(FamilyKind::Dirichlet)) == FamilyKind::Dirichlet);
  CHECK(to_json(shape_rule_from_json(to_json(d))) == to_json(d));
}
