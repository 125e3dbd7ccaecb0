#pragma once

#include <cstddef>
#include <vector>

#include "limsup/geom.hpp"

namespace limsup {

struct Atom {
  Vec point;
  double weight = 0.0;
};

/// Weighted atoms; represents optimal LP measures and smoothed measures.
struct DiscreteMeasure {
  std::vector<Atom> atoms;

  double total() const;
  void normalize();
};

/// Piecewise-uniform measure: atom i sits at the center of support.cubes[i]
/// and its weight is spread uniformly over that cube.
struct SmoothedShape {
  CubeUnion support;
  DiscreteMeasure measure;
  double density_bound = 0.0;
};

/// Uniform probability measure on a cube union.
SmoothedShape uniform_on(const CubeUnion& support);
/// Piecewise-uniform measure with the given cell masses (normalized).
SmoothedShape cell_measure(const CubeUnion& cells, const std::vector<double>& mass);

/// Mass of the closed ball B_r(x) under a piecewise-uniform measure.
double ball_mass(const SmoothedShape& m, const Vec& x, double r);

struct CertOptions {
  std::size_t max_eval_points = 4096;  // d >= 2 only
  double ladder_ratio = 1.189207115002721;  // 2^(1/4)
};

/// Rigorous lower bound on inf_{x in support, r > 0} r^s / m(B_r(x)).
/// Exact in d = 1 (vertex enumeration); a covering-net bound in d >= 2.
double certified_phi(const SmoothedShape& m, double s, const CertOptions& opt = {});

struct AnisotropyVector {
  Vec a;

  AnisotropyVector() = default;
  explicit AnisotropyVector(Vec values);
};

double falconer_svf(const Ellipsoid& e, double s);
double wwx_bound(std::size_t d, const AnisotropyVector& a);

struct PhiLpResult {
  double value = 0.0;        // certified lower bound on phi^s(e)
  double net_value = 0.0;    // min over the constraint net for the witness
  double upper = 0.0;        // rigorous upper bound on phi^s(e) from the dual
  double lp_objective = 0.0;
  double uniform_value = 0.0;  // certified value of the normalized Lebesgue measure
  double witness_value = 0.0;  // certified value of the LP witness
  bool witness_feasible = false;
  double max_violation = 0.0;
  std::size_t constraints = 0;
  std::size_t variables = 0;
  CubeUnion cells;
  DiscreteMeasure witness;
};

PhiLpResult phi_lower_lp(const CubeUnion& e, double s, std::size_t resolution);

struct ContentResult {
  double value = 0.0;
  double comparability = 1.0;  // d^{s/2}
  std::size_t max_depth = 0;
};

ContentResult content_dp(const CubeUnion& e, double s, std::size_t max_depth);

struct SandwichReport {
  double s = 0.0;
  double lower = 0.0;        // L
  double content = 0.0;      // U
  double phi_upper = 0.0;
  double comparability = 1.0;
  double slack = 1.05;
  bool lower_ok = false;
  bool upper_ok = false;
  bool pass() const { return lower_ok && upper_ok; }
};

SandwichReport sandwich_check(const CubeUnion& e, double s, std::size_t resolution = 8,
                              std::size_t max_depth = 10);

/// Mollifies mu by the normalized indicator of B_delta and restricts it to a
/// cube grid of e_open.
SmoothedShape smooth_to_cubes(const DiscreteMeasure& mu, const CubeUnion& e_open, double delta,
                              double eps);

/// Guaranteed phi-objective degradation of the smoothing, 2^s / (1 - eps)^2.
double kappa1_budget(double s, double eps);

double phi_of_shape(const Shape& shape, double s, std::size_t resolution = 8);

}  // namespace limsup
