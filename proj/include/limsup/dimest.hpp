#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "limsup/cantor.hpp"
#include "limsup/families.hpp"
#include "limsup/geom.hpp"

namespace limsup {

/// Dimension the shape rule targets: d/a, the wwx bound, or the dust exponent.
double target_dimension(const ShapeRule& rule, std::size_t d);

/// The branch of a point through the tree, read off realized quantities.
struct Branch {
  std::vector<std::size_t> cubes;  // cubes[g] is the generation-g cube containing x
  std::vector<std::size_t> pairs;  // pairs[g - 1] is the generation-g pair
};

Branch find_branch(const ConstructionTree& tree, const Vec& x);

struct CaseSplit {
  int which = 1;       // 1 or 2
  std::size_t n = 1;   // r~_n < r <= r~_{n-1}
  Branch branch;
};

CaseSplit case_split(const ConstructionTree& tree, const Vec& x, double r);

struct LocalDimSample {
  Vec x;
  double r = 0.0;
  double mu = 0.0;
  int which = 1;
  std::size_t n = 1;
  double bound = 0.0;
  bool pass = true;
};

struct LocalDimReport {
  std::vector<LocalDimSample> samples;
  double fitted_slope = 0.0;  // least squares of log mu against log r
  double s_certified = 0.0;
  std::size_t violations = 0;
  std::size_t consistency_violations = 0;  // nodes whose mass disagrees with c_const or children
  std::vector<std::string> failures;

  bool pass() const { return violations == 0 && consistency_violations == 0; }
};

struct CaseOptions {
  double s = 0.0;
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double tolerance = 1e-9;
};

/// Checks the Case 1 and Case 2 local bounds at sampled (x, r) and the
/// mass bookkeeping of every node.
LocalDimReport verify_case_bounds(const ConstructionTree& tree, const CaseOptions& opt);

/// kappa1 of a pair: lambda(B) / certified phi^s of the uniform measure on its support.
double pair_kappa1(const ConstructionTree& tree, std::size_t pair_id, double s);

struct MdpOptions {
  std::size_t samples = 2000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double tolerance = 1e-12;  // relative slack for rounding in mu
};

struct MdpReport {
  double s = 0.0;          // largest grid value certified
  double s_sup = 0.0;      // min over samples of log(mu / C) / log r
  double constant = 0.0;   // C = 2^d
  double r_lo = 0.0;
  double r_hi = 0.0;
  double fitted_slope = 0.0;
  std::vector<LocalDimSample> samples;
};

MdpReport mdp_report(const ConstructionTree& tree, const std::vector<double>& s_grid, const MdpOptions& opt = {});
double mdp_lower_bound(const ConstructionTree& tree, const std::vector<double>& s_grid, const MdpOptions& opt = {});

struct BoxCount {
  std::vector<int> levels;
  std::vector<std::size_t> counts;
  double slope = 0.0;
};

/// Occupied dyadic cubes of side 2^-k for each level k, with the fitted slope
/// of log N against k log 2. Boxes may be degenerate (points).
BoxCount box_counting(const std::vector<Box>& boxes, const std::vector<int>& levels);
BoxCount box_counting(const std::vector<CubeUnion>& sets, const std::vector<int>& levels);
BoxCount box_counting(const ConstructionTree& tree, const std::vector<int>& levels);

}  // namespace limsup
