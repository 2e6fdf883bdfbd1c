#pragma once

#include <json.hpp>

#include "mixmap/pathfinder.hpp"
#include "mixmap/sensitivity.hpp"

namespace mixmap {

// JSON encodings shared by session logs and the HTTP API. Doubles are written
// in shortest round-trip form.
nlohmann::json to_json(const InputMixture& m);
nlohmann::json to_json(const InputPoint& p);
nlohmann::json to_json(const OutputVector& v);
nlohmann::json to_json(const Point2& p);
nlohmann::json to_json(const std::vector<NeighborHit>& hits);
nlohmann::json to_json(const PathStep& step);
nlohmann::json to_json(const InterpolationPath& path);
nlohmann::json to_json(const SensitivityVector& s);
nlohmann::json to_json(const NormalizationStats& s);

InputMixture mixture_from_json(const nlohmann::json& j);

}  // namespace mixmap
