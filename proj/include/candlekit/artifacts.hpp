#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "candlekit/calibration.hpp"
#include "candlekit/inference.hpp"

namespace candlekit {

inline constexpr std::string_view kWeightsSchema = "candlekit.weights.v1";
inline constexpr std::string_view kCritvalsSchema = "candlekit.critvals.v1";

nlohmann::json weights_to_json(const CalibratedWeights& cw);
CalibratedWeights weights_from_json(const nlohmann::json& j);

nlohmann::json critvals_to_json(const CriticalValues& cv);
CriticalValues critvals_from_json(const nlohmann::json& j);

/// Writes `j` with two-space indent and a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace candlekit
