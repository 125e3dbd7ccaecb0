#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "limsup/content.hpp"
#include "limsup/geom.hpp"

namespace limsup {

enum class FamilyKind { RandomCover, Dirichlet, Explicit };

struct ShapeRule {
  enum class Kind { ConcentricBall, Ellipsoid, Dust, Cusp };
  Kind kind = Kind::ConcentricBall;
  double a = 1.0;          // concentric_ball
  Vec avec;                // ellipsoid, nondecreasing, a_1 >= 1
  std::size_t k = 1;       // dust
  double s_target = 0.5;   // dust
  double gamma = 1.0;      // cusp

  static ShapeRule concentric_ball(double a);
  static ShapeRule ellipsoid(Vec a);
  static ShapeRule dust(std::size_t k, double s_target);
  static ShapeRule cusp(double gamma);
  void validate(std::size_t d) const;
};

struct FamilySpec {
  FamilyKind kind = FamilyKind::RandomCover;
  std::size_t d = 1;
  ShapeRule rule;
  std::size_t count = 100;
  std::uint64_t seed = 0;
  double c = 2.0;          // random_cover radius constant
  std::string path;        // explicit
};

/// One (B_i, E_i) with the smoothed support and normalized Lebesgue measure.
struct ShapePair {
  Ball ball;
  Shape shape;
  SmoothedShape smoothed;
  std::size_t index = 0;  // 1-based position in the family
};

std::vector<Ball> gen_balls(const FamilySpec& spec);
ShapePair attach_shape(const Ball& ball, std::size_t index, const ShapeRule& rule);
std::vector<ShapePair> attach_shapes(const std::vector<Ball>& balls, const ShapeRule& rule);

/// Inner raster of an open shape by closed dyadic cubes; subdivision stops at min_cell.
CubeUnion rasterize(const Shape& shape, double min_cell);

struct CoverageReport {
  std::size_t depth = 0;
  double tolerance = 0.01;
  std::vector<std::size_t> cutoffs;
  std::vector<double> coverage;
  bool pass = false;
};

/// Grid estimate of lambda(union_{i > n} B_i) for each tail cutoff n.
CoverageReport verify_full_measure(const std::vector<Ball>& balls, std::size_t depth,
                                   std::vector<std::size_t> cutoffs = {}, double tolerance = 0.01);

/// A ball family with attached shapes. Dirichlet families are infinite and
/// enumerated lazily; the others hold spec.count balls. Not thread-safe.
class Family {
 public:
  explicit Family(FamilySpec spec);
  Family(FamilySpec spec, std::vector<ShapePair> pairs);

  const FamilySpec& spec() const { return spec_; }
  std::size_t dim() const { return spec_.d; }
  bool infinite() const { return spec_.kind == FamilyKind::Dirichlet; }

  /// The first spec.count balls.
  std::vector<Ball> balls() const;

  /// Balls with index > after, diameter <= max_diam and contained in cube,
  /// in index order, until their volume reaches volume_target or max_count
  /// candidates were found.
  std::vector<std::pair<std::size_t, Ball>> candidates(const AxisCube& cube, std::size_t after,
                                                       double max_diam, double volume_target,
                                                       std::size_t max_count) const;

  const ShapePair& pair(std::size_t index, const Ball& ball) const;

 private:
  std::size_t dirichlet_index(std::uint64_t p, std::uint64_t q) const;
  void grow_totients(std::uint64_t q) const;

  FamilySpec spec_;
  std::vector<Ball> balls_;
  mutable std::map<std::size_t, ShapePair> cache_;
  mutable std::vector<std::uint32_t> phi_;
  mutable std::vector<std::uint64_t> phi_prefix_;  // sum of phi(q') for 2 <= q' < q
};

nlohmann::json to_json(const ShapePair& p);
ShapePair shape_pair_from_json(const nlohmann::json& j);

void write_family_jsonl(const std::string& path, const std::vector<ShapePair>& pairs);
/// Reads ShapePair lines or bare ball objects; throws IO on an empty file.
std::vector<ShapePair> read_family_jsonl(const std::string& path, const ShapeRule* rule = nullptr);

std::string to_string(FamilyKind k);
FamilyKind family_kind_from_string(const std::string& s);
nlohmann::json to_json(const ShapeRule& r);
ShapeRule shape_rule_from_json(const nlohmann::json& j);
/// Parses "concentric:2", "ellipsoid:1,2", "dust:4,0.5", "cusp:2".
ShapeRule parse_shape_rule(const std::string& text);

nlohmann::json to_json(const FamilySpec& spec);
FamilySpec family_spec_from_json(const nlohmann::json& j);
/// The generator spec from a leading {"spec": ...} line, if the file has one.
std::optional<FamilySpec> read_family_header(const std::string& path);

}  // namespace limsup
