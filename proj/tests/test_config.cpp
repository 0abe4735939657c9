#include <doctest.h>

#include <fstream>

#include "msense/config.hpp"
#include "msense/error.hpp"
#include "test_util.hpp"

using namespace msense;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json minimal() {
  return json::parse(R"({
    "cameras": [{"id": 0,
                 "intrinsics": {"fx": 300, "fy": 300, "cx": 160, "cy": 120, "width": 320, "height": 240},
                 "pose": {"rotation": [1,0,0, 0,1,0, 0,0,1], "translation": [0,0,0]}}]
  })");
}

std::string config_error(const json& j) {
  try {
    parse_pipeline_config(j);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    return e.what();
  }
  FAIL("config was accepted");
  return {};
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("minimal config takes defaults") {
    PipelineConfig cfg = parse_pipeline_config(minimal());
    REQUIRE(cfg.cameras.size() == 1);
    CHECK(cfg.cameras[0].intrinsics.depth_min == 0.2);
    CHECK(cfg.cameras[0].intrinsics.depth_max == 20.0);
    CHECK(cfg.sync_window == 0.05);
    CHECK(cfg.zone_debounce_frames == 2);
    CHECK(cfg.mode == InputMode::kReplay);
  }

  TEST_CASE("unknown keys are named with their path") {
    json j = minimal();
    j["zonez"] = json::array();
    CHECK(config_error(j).find("'zonez'") != std::string::npos);
    json k = minimal();
    k["cameras"][0]["intrinsics"]["fz"] = 1;
    std::string msg = config_error(k);
    CHECK(msg.find("'fz'") != std::string::npos);
    CHECK(msg.find("cameras[0].intrinsics") != std::string::npos);
  }

  TEST_CASE("bad values are rejected") {
    json j = minimal();
    j["sync_window_s"] = -1;
    config_error(j);
    j = minimal();
    j["cameras"][0]["intrinsics"]["fx"] = "fast";
    config_error(j);
    j = minimal();
    j["cameras"][0]["pose"]["rotation"] = {1, 0, 0, 0, 1, 0, 0, 0, 2};
    config_error(j);
    j = minimal();
    j["rules"] = json::parse(R"([{"id": "r", "kind": "teleport"}])");
    config_error(j);
    j = minimal();
    j["zones"] = json::parse(R"([{"id": "z", "footprint": [[0,0],[0,1],[1,1],[1,0]]}])");
    config_error(j);
    j = minimal();
    j["sinks"] = json::parse(R"([{"kind": "pager"}])");
    config_error(j);
    j = minimal();
    j["cameras"].push_back(j["cameras"][0]);
    config_error(j);
  }

  TEST_CASE("full config parses zones, rules, sinks and look-at poses") {
    json j = minimal();
    j["cameras"][0]["pose"] = json::parse(R"({"eye": [0, -1, 2], "target": [0, 5, 1]})");
    j["zones"] = json::parse(R"([{"id": "z", "footprint": [[0,0],[1,0],[1,1],[0,1]],
                                  "z_min": 0, "z_max": 2, "on_exit_alarm": true}])");
    j["rules"] = json::parse(R"([
      {"id": "p", "kind": "proximity", "anchor": {"point": [0, 0, 0]}, "threshold": 2},
      {"id": "l", "kind": "distance_level", "anchor": {"class_id": 1}, "d_min": 0.5, "d_max": 5, "invert": true},
      {"id": "o", "kind": "zone_occupancy", "zone_id": "z"}])");
    j["sinks"] = json::parse(R"([{"kind": "file", "target": "alarms.jsonl"}, {"kind": "command", "target": "true"}])");
    j["sim"] = json::parse(R"({"scene": "scene.json", "seed": 9, "noise": {"disparity_std": 0.5}})");
    PipelineConfig cfg = parse_pipeline_config(j, "/tmp/base");
    REQUIRE(cfg.zones.size() == 1);
    CHECK(cfg.zones[0].on_exit_alarm);
    REQUIRE(cfg.rules.size() == 3);
    CHECK(cfg.rules[1].invert);
    CHECK(cfg.rules[1].anchor.class_id == 1);
    CHECK(cfg.rules[2].kind == RuleKind::kZoneOccupancy);
    CHECK(cfg.sinks[1].kind == SinkKind::kCommand);
    CHECK(cfg.sim.scene_path == "/tmp/base/scene.json");
    CHECK(cfg.sim.seed == 9);
    REQUIRE(cfg.sim.noise);
    CHECK(cfg.sim.noise->enabled);
    CHECK(cfg.sim.noise->disparity_std == 0.5);
    // Camera looks along +y with z up.
    Point3 fwd = cfg.cameras[0].pose.rotation.col(2);
    CHECK(fwd.y() > 0.9);
  }

  TEST_CASE("scene files") {
    json s = json::parse(R"({
      "duration": 2, "frame_rate": 5,
      "actors": [
        {"name": "a", "class_id": 1, "shape": {"type": "sphere", "radius": 0.3},
         "trajectory": [[0, 0, 0, 1], [2, 2, 0, 1]]},
        {"name": "b", "shape": {"type": "box", "min": [-0.2,-0.2,-0.8], "max": [0.2,0.2,0.8]},
         "trajectory": [[0, 1, 1, 1]]}],
      "noise": {"enabled": false}
    })");
    SceneFile sf = parse_scene(s);
    CHECK(sf.scene.frame_count() == 11);
    REQUIRE(sf.scene.actors.size() == 2);
    CHECK(std::holds_alternative<Sphere>(sf.scene.actors[0].shape));
    CHECK(sf.scene.actors[0].trajectory.at(1.0).isApprox(Point3(1, 0, 1)));
    REQUIRE(sf.noise);
    CHECK_FALSE(sf.noise->enabled);
    s["actors"][0]["shape"]["radius"] = -1;
    CHECK_THROWS_AS(parse_scene(s), Error);
    s["actors"][0]["shape"] = json::parse(R"({"type": "cone"})");
    CHECK_THROWS_AS(parse_scene(s), Error);
  }

  TEST_CASE("accuracy config") {
    AccuracyConfig def = parse_accuracy_config(json::object());
    CHECK(def.stations.size() == default_accuracy_config().stations.size());
    json j = json::parse(R"({
      "stations": [{"label": "a", "position": [1, 6, 0.85]}],
      "conditions": [{"name": "off", "noise": {"enabled": false}},
                     {"name": "on", "noise": {"disparity_std": 0.3}, "pitch_deg": 5, "seed": 3}]
    })");
    AccuracyConfig cfg = parse_accuracy_config(j);
    REQUIRE(cfg.stations.size() == 1);
    CHECK(cfg.stations[0].label == "a");
    REQUIRE(cfg.conditions.size() == 2);
    CHECK(cfg.conditions[1].noise.enabled);
    CHECK(cfg.conditions[1].pitch_deg == 5);
    CHECK(cfg.conditions[1].seed == 3);
    json fan = json::parse(R"({"fan": {"bearings_deg": [-12, 12], "ranges": [4, 8]}})");
    CHECK(parse_accuracy_config(fan).stations.size() == 4);
    j["bogus"] = 1;
    CHECK_THROWS_AS(parse_accuracy_config(j), Error);
  }

  TEST_CASE("loading from disk resolves the scene path and maps parse errors") {
    auto dir = testing::scratch_dir("config_load");
    {
      json j = minimal();
      j["sim"] = {{"scene", "walk.json"}};
      std::ofstream(dir / "c.json") << j.dump();
      std::ofstream(dir / "broken.json") << "{ not json";
    }
    PipelineConfig cfg = load_pipeline_config(dir / "c.json");
    CHECK(fs::path(cfg.sim.scene_path) == dir / "walk.json");
    try {
      load_pipeline_config(dir / "broken.json");
      FAIL("expected config error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kConfig);
    }
    CHECK_THROWS_AS(load_pipeline_config(dir / "absent.json"), Error);
  }

  TEST_CASE("bundled example configs load") {
    const fs::path root = MSENSE_SOURCE_DIR;
    PipelineConfig site = load_pipeline_config(root / "configs" / "site.json");
    CHECK(site.cameras.size() == 2);
    SceneFile sf = load_scene(site.sim.scene_path);
    CHECK(sf.scene.actors.size() == 2);
  }
}
