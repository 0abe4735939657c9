#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "msense/bench.hpp"
#include "msense/error.hpp"
#include "msense/runner.hpp"
#include "test_util.hpp"

using namespace msense;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

json one_camera_config(const std::string& scene) {
  return json::parse(R"({
    "cameras": [{"id": 0,
                 "intrinsics": {"fx": 300, "fy": 300, "cx": 160, "cy": 120, "width": 320, "height": 240},
                 "pose": {"eye": [0, -2, 1.2], "target": [0, 5, 0.85]}}],
    "zones": [{"id": "z", "footprint": [[-1, 3], [1, 3], [1, 6], [-1, 6]], "on_exit_alarm": true}],
    "sinks": [],
    "sim": {"scene": ")" + scene + R"(", "seed": 5, "noise": {"enabled": true}}
  })");
}

json walker_scene() {
  return json::parse(R"({
    "duration": 5.0, "frame_rate": 10.0,
    "actors": [{"name": "w", "class_id": 0,
                "shape": {"type": "box", "min": [-0.25, -0.15, -0.85], "max": [0.25, 0.15, 0.85]},
                "trajectory": [[0, -2.0, 5.0, 0.85], [5, 2.0, 5.0, 0.85]]}]
  })");
}

struct Run {
  int code;
  std::string out, err;
};

template <typename Fn>
Run call(Fn fn, const CliOptions& o) {
  std::ostringstream out, err;
  int code = fn(o, out, err);
  return {code, out.str(), err.str()};
}

std::set<std::int64_t> confirmed_ids(const fs::path& tracks) {
  std::set<std::int64_t> ids;
  for (const auto& r : read_track_records(tracks))
    if (r.status == TrackStatus::kConfirmed) ids.insert(r.id);
  return ids;
}

// Simulates the walker scene into <dir>/sim and returns the options used.
CliOptions simulate_walker(const fs::path& dir) {
  write_json(dir / "scene.json", walker_scene());
  write_json(dir / "config.json", one_camera_config("scene.json"));
  CliOptions o;
  o.config = (dir / "config.json").string();
  o.output = (dir / "sim").string();
  Run r = call(cmd_simulate, o);
  INFO(r.err);
  REQUIRE(r.code == 0);
  return o;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("exit codes map error kinds") {
    CHECK(exit_code_for(Error(ErrorCode::kConfig, "")) == 2);
    CHECK(exit_code_for(Error(ErrorCode::kDegenerateInput, "")) == 2);
    CHECK(exit_code_for(Error(ErrorCode::kInput, "")) == 3);
    CHECK(exit_code_for(Error(ErrorCode::kOrdering, "")) == 3);
    CHECK(exit_code_for(Error(ErrorCode::kLogWrite, "")) == 1);
  }

  TEST_CASE("simulate: one constant-velocity actor gives one confirmed track") {
    auto dir = testing::scratch_dir("cli_walker");
    simulate_walker(dir);
    CHECK(confirmed_ids(dir / "sim" / "tracks.jsonl").size() == 1);
    CHECK(fs::exists(dir / "sim" / "ground_truth.jsonl"));
    CHECK(read_ground_truth(dir / "sim" / "ground_truth.jsonl").size() == 51);
    RunStats s = read_run_stats(dir / "sim" / "stats.json");
    CHECK(s.frames == 51);
    CHECK(s.confirmed_tracks == 1);
    auto events = read_event_log((dir / "sim" / "events.jsonl").string());
    REQUIRE(events.size() == 2);
    CHECK(events[0].event.kind == EventKind::kZoneEntry);
    CHECK(events[1].event.kind == EventKind::kZoneExit);
  }

  TEST_CASE("simulate: empty scene gives zero tracks") {
    auto dir = testing::scratch_dir("cli_empty");
    write_json(dir / "scene.json", json::parse(R"({"duration": 2, "frame_rate": 10, "actors": []})"));
    write_json(dir / "config.json", one_camera_config("scene.json"));
    CliOptions o;
    o.config = (dir / "config.json").string();
    o.output = (dir / "out").string();
    Run r = call(cmd_simulate, o);
    REQUIRE(r.code == 0);
    CHECK(read_track_records(dir / "out" / "tracks.jsonl").empty());
    CHECK(read_run_stats(dir / "out" / "stats.json").frames == 21);
  }

  TEST_CASE("simulate: same seed gives identical outputs, another seed differs") {
    auto dir = testing::scratch_dir("cli_seed");
    CliOptions o = simulate_walker(dir);
    o.output = (dir / "sim2").string();
    REQUIRE(call(cmd_simulate, o).code == 0);
    for (const char* f : {"events.jsonl", "tracks.jsonl", "ground_truth.jsonl", "input/cam0/detections.jsonl",
                          "input/cam0/frames.jsonl", "input/cam0/000010.dpt"}) {
      INFO(f);
      CHECK(slurp(dir / "sim" / f) == slurp(dir / "sim2" / f));
    }
    o.output = (dir / "sim3").string();
    o.seed = 6;
    REQUIRE(call(cmd_simulate, o).code == 0);
    CHECK(slurp(dir / "sim" / "input/cam0/000010.dpt") != slurp(dir / "sim3" / "input/cam0/000010.dpt"));
  }

  TEST_CASE("run: replay, bad config and broken input") {
    auto dir = testing::scratch_dir("cli_run");
    CliOptions sim = simulate_walker(dir);
    CliOptions o;
    o.config = sim.config;
    o.input = (dir / "sim" / "input").string();
    o.output = (dir / "replay").string();
    Run ok = call(cmd_run, o);
    INFO(ok.err);
    CHECK(ok.code == 0);
    CHECK(fs::file_size(dir / "replay" / "stats.json") > 0);
    CHECK(slurp(dir / "replay" / "events.jsonl") == slurp(dir / "sim" / "events.jsonl"));
    CHECK(slurp(dir / "replay" / "tracks.jsonl") == slurp(dir / "sim" / "tracks.jsonl"));

    json bad = one_camera_config("scene.json");
    bad["zonez"] = json::array();
    write_json(dir / "bad.json", bad);
    CliOptions b = o;
    b.config = (dir / "bad.json").string();
    Run rb = call(cmd_run, b);
    CHECK(rb.code == 2);
    CHECK(rb.err.find("zonez") != std::string::npos);

    fs::resize_file(dir / "sim" / "input" / "cam0" / "000003.dpt", 100);
    Run rt = call(cmd_run, o);
    CHECK(rt.code == 3);
    CHECK(rt.err.find(std::to_string(depth_file_size(320, 240))) != std::string::npos);
    CHECK(rt.err.find("100") != std::string::npos);

    CliOptions missing = o;
    missing.input = (dir / "nowhere").string();
    CHECK(call(cmd_run, missing).code == 3);
  }

  TEST_CASE("calibrate: examples through the pose file") {
    auto dir = testing::scratch_dir("cli_cal");
    const std::vector<Point3> src = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
    auto run_with = [&](const RigidTransform& g) {
      CorrespondenceSet pairs;
      for (const auto& p : src) pairs.push_back({p, g.apply(p)});
      write_correspondences(dir / "c.jsonl", pairs);
      CliOptions o;
      o.input = (dir / "c.jsonl").string();
      o.output = (dir / "pose.json").string();
      REQUIRE(call(cmd_calibrate, o).code == 0);
      return read_pose(dir / "pose.json");
    };
    PoseRecord id = run_with(RigidTransform::identity());
    CHECK(id.transform.rotation.isApprox(Matrix3::Identity(), 1e-12));
    CHECK(id.transform.translation.norm() < 1e-12);
    PoseRecord tr = run_with({Matrix3::Identity(), Point3(1, 2, 3)});
    CHECK((tr.transform.translation - Point3(1, 2, 3)).norm() < 1e-12);
    PoseRecord rz = run_with(RigidTransform::from_axis_angle(Point3::UnitZ(), M_PI / 2, Point3::Zero()));
    Matrix3 expect;
    expect << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    CHECK((rz.transform.rotation - expect).norm() < 1e-12);
    CHECK(rz.rms_residual < 1e-12);

    CorrespondenceSet line;
    for (int i = 0; i < 4; ++i) line.push_back({Point3(i, 0, 0), Point3(i, 1, 0)});
    write_correspondences(dir / "line.jsonl", line);
    CliOptions o;
    o.input = (dir / "line.jsonl").string();
    o.output = (dir / "p2.json").string();
    CHECK(call(cmd_calibrate, o).code == 2);
  }

  TEST_CASE("calibrate: clouds add an ICP block") {
    auto dir = testing::scratch_dir("cli_cal_icp");
    std::mt19937_64 rng(3);
    PointCloud tgt;
    for (int i = 0; i < 2000; ++i) {
      Point3 p = testing::random_point(rng, 0, 2);
      p[i % 3] = 0;  // three orthogonal walls
      tgt.points.push_back(p);
    }
    RigidTransform g = RigidTransform::from_axis_angle(Point3(1, 1, 0).normalized(), 0.05, Point3(0.05, 0, 0));
    PointCloud src;
    for (const auto& p : tgt.points) src.points.push_back(g.inverse().apply(p));
    write_ply((dir / "s.ply").string(), src);
    write_ply((dir / "t.ply").string(), tgt);
    CorrespondenceSet pairs;
    for (int i = 0; i < 6; ++i) pairs.push_back({src.points[i * 100], tgt.points[i * 100]});
    write_correspondences(dir / "c.jsonl", pairs);
    CliOptions o;
    o.input = (dir / "c.jsonl").string();
    o.output = (dir / "pose.json").string();
    o.source_ply = (dir / "s.ply").string();
    o.target_ply = (dir / "t.ply").string();
    Run r = call(cmd_calibrate, o);
    INFO(r.err);
    REQUIRE(r.code == 0);
    PoseRecord p = read_pose(dir / "pose.json");
    REQUIRE(p.icp);
    CHECK((p.icp->transform.translation - g.translation).norm() < 0.02);
  }

  TEST_CASE("bench: 100 frames and a report that round trips") {
    auto dir = testing::scratch_dir("cli_bench");
    CliOptions o;
    o.output = dir.string();
    o.frames = 100;
    Run r = call(cmd_bench, o);
    INFO(r.err);
    REQUIRE(r.code == 0);
    json j = read_json_file(dir / "bench.json");
    BenchReport rep = bench_report_from_json(j);
    CHECK(rep.frames == 100);
    REQUIRE(rep.columns.size() == 4);
    for (const auto& c : rep.columns) CHECK(c.frames == 100);
    CHECK(json(bench_report_to_json(rep)) == j);
    REQUIRE(rep.column("two_cameras"));
    CHECK(rep.column("two_cameras")->cameras == 2);
    CHECK(r.out.find("single_camera") != std::string::npos);
  }

  TEST_CASE("accuracy: three conditions give four outputs, reruns are identical") {
    auto dir = testing::scratch_dir("cli_acc");
    write_json(dir / "acc.json", json::parse(R"({
      "fan": {"bearings_deg": [-12, 12], "ranges": [3.5, 8.0, 12.5]},
      "conditions": [{"name": "off", "noise": {"enabled": false}},
                     {"name": "on", "noise": {}, "seed": 4},
                     {"name": "pitch", "noise": {}, "pitch_deg": 5, "seed": 5}]
    })"));
    CliOptions o;
    o.config = (dir / "acc.json").string();
    o.output = (dir / "a").string();
    REQUIRE(call(cmd_accuracy, o).code == 0);
    for (const char* n : {"off", "on", "pitch", "average"}) {
      CHECK(fs::exists(dir / "a" / n / "heatmap.csv"));
      CHECK(fs::exists(dir / "a" / n / "heatmap.ppm"));
    }
    std::ifstream csv(dir / "a" / "off" / "heatmap.csv");
    for (const auto& c : read_heatmap_csv(csv).cells) CHECK(c.abs_error < 0.3);
    o.output = (dir / "b").string();
    REQUIRE(call(cmd_accuracy, o).code == 0);
    for (const char* n : {"off", "on", "pitch", "average"})
      CHECK(slurp(dir / "a" / n / "heatmap.csv") == slurp(dir / "b" / n / "heatmap.csv"));
  }
}
