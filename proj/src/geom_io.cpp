#include "limsup/geom_io.hpp"

namespace limsup {

using nlohmann::json;

json cube_to_json(const AxisCube& c) {
  return json{{"type", "cube"}, {"corner", c.corner}, {"side", c.side}};
}

AxisCube cube_from_json(const json& j) {
  return AxisCube(j.at("corner").get<Vec>(), j.at("side").get<double>());
}

json to_json(const Shape& s) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return json{{"type", "ball"}, {"center", x.center}, {"radius", x.radius}};
        } else if constexpr (std::is_same_v<T, AxisCube>) {
          return cube_to_json(x);
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          return json{{"type", "ellipsoid"}, {"center", x.center}, {"semiaxes", x.semiaxes}};
        } else {
          json cubes = json::array();
          for (const auto& c : x.cubes) cubes.push_back(json{{"corner", c.corner}, {"side", c.side}});
          return json{{"type", "cube_union"}, {"cubes", std::move(cubes)}};
        }
      },
      s);
}

Shape shape_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "ball") return Ball(j.at("center").get<Vec>(), j.at("radius").get<double>());
  if (type == "cube") return cube_from_json(j);
  if (type == "ellipsoid") return Ellipsoid(j.at("center").get<Vec>(), j.at("semiaxes").get<Vec>());
  if (type == "cube_union") {
    std::vector<AxisCube> cubes;
    for (const auto& c : j.at("cubes")) cubes.push_back(cube_from_json(c));
    return CubeUnion(std::move(cubes));
  }
  throw Error(ErrorCode::PreViolation, "unknown shape type '" + type + "'");
}

}  // namespace limsup
