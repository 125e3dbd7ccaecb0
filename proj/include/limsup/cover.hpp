#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "limsup/geom.hpp"

namespace limsup {

struct CoverParams {
  double epsilon = 0.25;
  double kappa2 = 0.0;  // 0 selects kappa2_default(d, epsilon)
  /// Keep scanning after the volume target is met (full greedy pass).
  bool exhaustive = false;
};

/// (1 - 2 eps)^d 15^-d.
double kappa2_default(std::size_t d, double epsilon);

/// Indices into the candidate list of the selected balls, in selection order.
struct CoverSelection {
  std::vector<std::size_t> indices;
  double selected_volume = 0.0;
  double target_volume = 0.0;
};

/// Largest-radius-first selection (ties by index) of balls inside `c` whose
/// 3-dilations are pairwise disjoint, until their volume reaches
/// kappa2 * lambda(c). Throws INSUFFICIENT_FAMILY when the candidates run out.
CoverSelection greedy_vitali(const std::vector<Ball>& candidates, const AxisCube& c,
                             const CoverParams& params);

/// Independent re-check of a selection: pairwise disjoint 3-dilations,
/// containment in c, and the volume target. Returns an empty string if valid,
/// otherwise a description of the first failure.
std::string check_cover(const std::vector<Ball>& selected, const AxisCube& c, double kappa2);

}  // namespace limsup
