#pragma once

#include <json.hpp>

#include "limsup/geom.hpp"

namespace limsup {

/// Shape <-> JSON: {"type": "ball"|"cube"|"ellipsoid"|"cube_union", ...};
/// d is inferred from vector lengths.
nlohmann::json to_json(const Shape& s);
Shape shape_from_json(const nlohmann::json& j);

nlohmann::json cube_to_json(const AxisCube& c);
AxisCube cube_from_json(const nlohmann::json& j);

}  // namespace limsup
