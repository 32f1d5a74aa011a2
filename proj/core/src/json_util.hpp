// Private helpers shared by the modules that read and write JSON.
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include <json.hpp>

#include "srl/scene_graph.hpp"

namespace srl::detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Integral values are written as JSON integers so pixel coordinates read
/// back as `10`, not `10.0`; everything else keeps full double precision.
inline ordered_json number(double v) {
  constexpr double kExactIntLimit = 9007199254740992.0;  // 2^53
  if (std::isfinite(v) && std::trunc(v) == v && std::fabs(v) < kExactIntLimit) {
    return ordered_json(static_cast<std::int64_t>(v));
  }
  return ordered_json(v);
}

ordered_json scene_to_json(const SceneGraph& canonical_graph);

/// Shared by parse_scene_json and the dataset readers, which already hold a
/// parsed document.
SceneParse scene_from_json(const json& doc, const ValidationOptions& options);

}  // namespace srl::detail
