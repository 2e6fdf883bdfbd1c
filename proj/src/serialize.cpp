#include "mixmap/serialize.hpp"

namespace mixmap {

using json = nlohmann::json;

namespace {

template <std::size_t N>
json array_json(const std::array<double, N>& a) {
    json out = json::array();
    for (double v : a) out.push_back(v);
    return out;
}

}  // namespace

json to_json(const InputMixture& m) { return array_json(m.ratios()); }
json to_json(const InputPoint& p) { return array_json(p); }
json to_json(const OutputVector& v) { return array_json(v); }
json to_json(const Point2& p) { return array_json(p); }

json to_json(const std::vector<NeighborHit>& hits) {
    json out = json::array();
    for (const auto& h : hits) out.push_back({{"id", h.id}, {"distance", h.distance}});
    return out;
}

json to_json(const PathStep& s) {
    return json{{"lambda", s.lambda},
                {"input", to_json(s.input)},
                {"predicted", to_json(s.predicted)},
                {"snapped_id", s.snapped_id},
                {"embed_xy", to_json(s.embed_xy)},
                {"snap_distance", s.snap_distance}};
}

json to_json(const InterpolationPath& path) {
    auto endpoint = [](const PathEndpoint& e) {
        return json{{"record_id", e.record ? json(*e.record) : json(nullptr)}, {"mixture", to_json(e.mixture)}};
    };
    json steps = json::array();
    for (const auto& s : path.steps) steps.push_back(to_json(s));
    return json{{"from", endpoint(path.from)}, {"to", endpoint(path.to)}, {"path", steps}};
}

json to_json(const SensitivityVector& s) {
    return json{{"output_index", s.output_index},
                {"values", to_json(s.values)},
                {"tangent", to_json(s.tangent)},
                {"sample_std", to_json(s.sample_std)},
                {"clamp_count", s.clamp_count}};
}

json to_json(const NormalizationStats& s) {
    json constant = json::array();
    for (bool c : s.output_constant) constant.push_back(c);
    return json{{"output_mean", to_json(s.output_mean)},
                {"output_std", to_json(s.output_std)},
                {"output_min", to_json(s.output_min)},
                {"output_max", to_json(s.output_max)},
                {"output_constant", constant},
                {"input_min", to_json(s.input_min)},
                {"input_max", to_json(s.input_max)}};
}

InputMixture mixture_from_json(const json& j) {
    if (!j.is_array() || j.size() != kInputDims)
        throw Error(ErrorKind::validation, "mixture must be an array of 6 numbers", "mixture");
    std::array<double, kInputDims> r{};
    for (std::size_t i = 0; i < kInputDims; ++i) {
        if (!j[i].is_number())
            throw Error(ErrorKind::validation, "mixture[" + std::to_string(i) + "] is not a number", "mixture");
        r[i] = j[i].get<double>();
    }
    return validate_mixture(r);
}

}  // namespace mixmap
