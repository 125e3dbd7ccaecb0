#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "limsup/families.hpp"
#include "limsup/geom.hpp"

namespace limsup {

struct ConstructionParams {
  std::vector<double> eps_schedule;  // empty: eps_j = 1/(j+1)
  double kappa2 = 0.0;               // 0: kappa2_default(d, 1/4)
  std::size_t max_depth = 3;
  double rtilde_floor = 0x1p-40;
  std::size_t max_pieces = 1;        // pieces per smallest support component
  std::size_t max_nodes = 2000000;
  bool exhaustive = false;           // full greedy pass instead of stopping at kappa2

  double eps(std::size_t j) const;
};

/// A generation-j cube D_k^(j) carrying mass mu_j(D) = c_const * lambda(D).
struct CubeNode {
  std::size_t generation = 0;
  AxisCube cube;
  double mass = 0.0;
  double c_const = 0.0;
  double cn_bound = 1.0;  // prod lambda(B) ell / kappa2 along the branch
  long parent = -1;       // pair id, -1 for the root
  std::vector<std::size_t> pairs;
};

/// A ball selected at generation j inside its parent cube, with nu_j(B).
struct PairNode {
  std::size_t generation = 0;
  std::size_t index = 0;
  Ball ball;
  CubeUnion support;
  double ell = 0.0;
  double nu = 0.0;
  double rtilde = 0.0;     // realized subdivision scale of the support
  std::size_t parent = 0;  // cube id
  std::vector<std::size_t> cubes;
};

struct GenerationInfo {
  std::size_t generation = 0;
  double r_min = 0.0;     // r_j: smallest support component diameter
  double schedule = 0.0;  // literal schedule value
  double rtilde = 0.0;    // smallest realized subdivision scale
  bool clamped = false;
  std::size_t max_index = 0;
  std::size_t cubes = 0;
  std::size_t pairs = 0;
};

struct ConstructionTree {
  std::size_t d = 1;
  double kappa2 = 0.0;
  std::size_t depth = 0;
  ConstructionParams params;
  std::vector<CubeNode> cubes;  // cubes[0] is [0,1]^d
  std::vector<PairNode> pairs;
  std::vector<GenerationInfo> generations;
  bool depth_unreachable = false;  // some r~_j was raised above the literal schedule
};

ConstructionTree build(const Family& family, const ConstructionParams& params);
ConstructionTree build(const std::vector<ShapePair>& pairs, const ConstructionParams& params);

/// mu_g(B_r(x)) for g <= depth (default: depth).
double measure_of_ball(const ConstructionTree& tree, const Vec& x, double r,
                       std::optional<std::size_t> generation = std::nullopt);

struct CRow {
  std::size_t generation = 0;
  double max_c = 0.0;
  double bound = 0.0;  // largest product bound on C_j over the generation
  bool ok = true;      // every node satisfies C <= its own branch bound
};

std::vector<CRow> c_constants(const ConstructionTree& tree);

struct InvariantReport {
  double max_mass_error = 0.0;
  double max_consistency_error = 0.0;
  double max_muond_error = 0.0;
  bool mass_ok = true;
  bool consistency_ok = true;
  bool muond_ok = true;
  bool cn_ok = true;
  bool nesting_ok = true;
  bool disjoint_ok = true;
  std::vector<std::string> failures;

  bool pass() const { return mass_ok && consistency_ok && muond_ok && cn_ok && nesting_ok && disjoint_ok; }
};

InvariantReport check_invariants(const ConstructionTree& tree);

/// Test hook: scales one cube's mass without touching its c_const.
void corrupt_mass(ConstructionTree& tree, std::size_t cube_id, double factor);

std::vector<std::size_t> leaves(const ConstructionTree& tree);

nlohmann::json to_json(const ConstructionTree& tree);
ConstructionTree tree_from_json(const nlohmann::json& j);

}  // namespace limsup
