#include "limsup/cover.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

namespace limsup {

double kappa2_default(std::size_t d, double epsilon) {
  require(d >= 1, "dimension must be positive");
  require(epsilon > 0.0 && epsilon < 0.5, "epsilon must lie in (0, 1/2)");
  return std::pow((1.0 - 2.0 * epsilon) / 15.0, static_cast<double>(d));
}

CoverSelection greedy_vitali(const std::vector<Ball>& candidates, const AxisCube& c,
                             const CoverParams& params) {
  const std::size_t d = c.dim();
  const double kappa2 = params.kappa2 > 0.0 ? params.kappa2 : kappa2_default(d, params.epsilon);
  require(kappa2 <= kappa2_default(d, params.epsilon) * (1.0 + 1e-12),
          "kappa2 exceeds (1-2 eps)^d 15^-d");

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].radius > candidates[b].radius;
  });

  CoverSelection sel;
  sel.target_volume = kappa2 * volume(c);
  std::vector<Ball> dilated;
  for (std::size_t idx : order) {
    const Ball& b = candidates[idx];
    require(b.dim() == d, "candidate ball dimension mismatch");
    if (!contains(c, b)) continue;
    Ball b3 = scale_ball(b, 3.0);
    const bool free = std::all_of(dilated.begin(), dilated.end(),
                                  [&](const Ball& other) { return disjoint(b3, other); });
    if (!free) continue;
    dilated.push_back(std::move(b3));
    sel.indices.push_back(idx);
    sel.selected_volume += volume(b);
    if (!params.exhaustive && sel.selected_volume >= sel.target_volume) break;
  }
  if (sel.selected_volume < sel.target_volume) {
    std::ostringstream msg;
    msg << "greedy selection reached volume " << sel.selected_volume << " of required " << sel.target_volume;
    throw Error(ErrorCode::InsufficientFamily, msg.str());
  }
  return sel;
}

std::string check_cover(const std::vector<Ball>& selected, const AxisCube& c, double kappa2) {
  double total = 0.0;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (!contains(c, selected[i])) return "ball " + std::to_string(i) + " is not inside the cube";
    total += volume(selected[i]);
    for (std::size_t j = i + 1; j < selected.size(); ++j) {
      if (!disjoint(scale_ball(selected[i], 3.0), scale_ball(selected[j], 3.0))) {
        return "3-dilations of balls " + std::to_string(i) + " and " + std::to_string(j) + " meet";
      }
    }
  }
  if (total < kappa2 * volume(c)) return "selected volume below kappa2 * lambda(C)";
  return {};
}

}  // namespace limsup
