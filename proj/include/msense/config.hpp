#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "msense/accuracy.hpp"
#include "msense/pipeline.hpp"
#include "msense/sim.hpp"

namespace msense {

// All parsers are strict: unknown keys, wrong types and out-of-range values
// throw Error(kConfig) with a message naming the offending key path, e.g.
// "unknown key 'zonez' at <root>".

// Relative sim.scene paths resolve against `base_dir`.
PipelineConfig parse_pipeline_config(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct SceneFile {
  Scene scene;
  std::optional<NoiseModel> noise;
};
SceneFile parse_scene(const nlohmann::json& j);
SceneFile load_scene(const std::filesystem::path& path);

// Missing keys fall back to default_accuracy_config().
AccuracyConfig parse_accuracy_config(const nlohmann::json& j);
AccuracyConfig load_accuracy_config(const std::filesystem::path& path);

CameraIntrinsics parse_intrinsics(const nlohmann::json& j, const std::string& where = "intrinsics");
NoiseModel parse_noise(const nlohmann::json& j, const std::string& where = "noise");

nlohmann::ordered_json intrinsics_to_json(const CameraIntrinsics& k);
nlohmann::ordered_json camera_to_json(const CameraConfig& c);

}  // namespace msense
