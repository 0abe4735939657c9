#include "msense/bench.hpp"

#include <chrono>
#include <cstdio>
#include <thread>

#include "msense/error.hpp"
#include "msense/runner.hpp"

namespace msense {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

PipelineConfig with_cameras(PipelineConfig cfg, std::size_t n) {
  cfg.cameras.resize(n);
  cfg.sinks.clear();
  return cfg;
}

Scene covering(Scene s, long frames) {
  s.duration = std::max(s.duration, static_cast<double>(frames - 1) / s.frame_rate);
  return s;
}

BenchColumn bench_memory(const BenchSetup& setup, std::size_t cams, long frames,
                         const std::string& name) {
  const PipelineConfig cfg = with_cameras(setup.config, cams);
  const Scene scene = covering(scene_for_config(setup.scene, cfg), frames);
  Pipeline pipe(cfg, std::make_unique<StringLineWriter>());

  BenchColumn col;
  col.name = name;
  col.cameras = static_cast<int>(cams);
  col.source = "memory";
  const auto wall0 = Clock::now();
  for (long f = 0; f < frames; ++f) {
    const double t = scene.frame_time(f);
    const auto t_cap = Clock::now();
    FrameBundle bundle;
    bundle.timestamp = t;
    for (std::size_t ci = 0; ci < cams; ++ci) {
      CameraFrame frame;
      frame.camera_id = scene.cameras[ci].id;
      frame.frame_index = f;
      frame.timestamp = t;
      frame.depth = render_depth(scene, ci, t);
      if (setup.noise.enabled) {
        frame.depth = apply_noise(frame.depth, scene.cameras[ci].intrinsics, setup.noise,
                                  derive_seed(derive_seed(setup.seed, ci), f));
      }
      frame.detections = synth_detections(scene, ci, t, f);
      bundle.frames.push_back(std::move(frame));
    }
    const BundleResult res = pipe.process(bundle, ms_between(t_cap, Clock::now()));
    col.mean.capture_ms += res.stats.capture_ms;
    col.mean.lift_ms += res.stats.lift_ms;
    col.mean.fuse_ms += res.stats.fuse_ms;
    col.mean.track_ms += res.stats.track_ms;
    col.mean.rules_ms += res.stats.rules_ms;
    col.mean.total_ms += res.stats.total_ms;
    ++col.frames;
  }
  col.wall_s = ms_between(wall0, Clock::now()) / 1000.0;
  col.fps = col.wall_s > 0 ? static_cast<double>(col.frames) / col.wall_s : 0.0;
  const double n = static_cast<double>(std::max<long>(col.frames, 1));
  col.mean.capture_ms /= n;
  col.mean.lift_ms /= n;
  col.mean.fuse_ms /= n;
  col.mean.track_ms /= n;
  col.mean.rules_ms /= n;
  col.mean.total_ms /= n;
  col.mean.fps = col.fps;
  return col;
}

BenchColumn bench_files(const BenchSetup& setup, std::size_t cams, long frames,
                        const fs::path& input, const fs::path& out, const std::string& name) {
  ReplayOptions opts;
  opts.max_bundles = frames;
  const RunStats st = run_replay(with_cameras(setup.config, cams), input, out, opts);
  BenchColumn col;
  col.name = name;
  col.cameras = static_cast<int>(cams);
  col.source = "files";
  col.frames = st.frames;
  col.wall_s = st.wall_s;
  col.fps = st.fps;
  col.mean = st.mean;
  return col;
}

ordered_json stage_json(const FrameStats& s) {
  ordered_json m;
  m["capture"] = s.capture_ms;
  m["lift"] = s.lift_ms;
  m["fuse"] = s.fuse_ms;
  m["track"] = s.track_ms;
  m["rules"] = s.rules_ms;
  m["total"] = s.total_ms;
  return m;
}

}  // namespace

const BenchColumn* BenchReport::column(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

ordered_json bench_report_to_json(const BenchReport& r) {
  ordered_json j;
  j["frames"] = r.frames;
  j["hardware_threads"] = r.hardware_threads;
  ordered_json cols = ordered_json::array();
  for (const auto& c : r.columns) {
    ordered_json cj;
    cj["name"] = c.name;
    cj["cameras"] = c.cameras;
    cj["source"] = c.source;
    cj["frames"] = c.frames;
    cj["wall_s"] = c.wall_s;
    cj["fps"] = c.fps;
    cj["mean_stage_ms"] = stage_json(c.mean);
    cols.push_back(std::move(cj));
  }
  j["columns"] = std::move(cols);
  return j;
}

BenchReport bench_report_from_json(const json& j) {
  BenchReport r;
  r.frames = j.at("frames").get<long>();
  r.hardware_threads = j.at("hardware_threads").get<unsigned>();
  for (const auto& cj : j.at("columns")) {
    BenchColumn c;
    c.name = cj.at("name").get<std::string>();
    c.cameras = cj.at("cameras").get<int>();
    c.source = cj.at("source").get<std::string>();
    c.frames = cj.at("frames").get<long>();
    c.wall_s = cj.at("wall_s").get<double>();
    c.fps = cj.at("fps").get<double>();
    const json& m = cj.at("mean_stage_ms");
    c.mean.capture_ms = m.at("capture").get<double>();
    c.mean.lift_ms = m.at("lift").get<double>();
    c.mean.fuse_ms = m.at("fuse").get<double>();
    c.mean.track_ms = m.at("track").get<double>();
    c.mean.rules_ms = m.at("rules").get<double>();
    c.mean.total_ms = m.at("total").get<double>();
    c.mean.fps = c.fps;
    r.columns.push_back(std::move(c));
  }
  return r;
}

std::string format_bench_table(const BenchReport& r) {
  std::string s;
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %7s %9s %9s %9s %9s %9s %9s %9s\n", "column", "frames",
                "fps", "capture", "lift", "fuse", "track", "rules", "total");
  s += line;
  for (const auto& c : r.columns) {
    std::snprintf(line, sizeof line, "%-14s %7ld %9.2f %9.3f %9.3f %9.3f %9.3f %9.3f %9.3f\n",
                  c.name.c_str(), c.frames, c.fps, c.mean.capture_ms, c.mean.lift_ms,
                  c.mean.fuse_ms, c.mean.track_ms, c.mean.rules_ms, c.mean.total_ms);
    s += line;
  }
  s += "(stage columns are mean milliseconds per bundle)\n";
  return s;
}

BenchSetup default_bench_setup() {
  BenchSetup b;
  CameraIntrinsics k;
  k.fx = k.fy = 350.0;
  k.cx = 320.0;
  k.cy = 180.0;
  k.width = 640;
  k.height = 360;
  const Point3 look(0.0, 5.0, 0.9);
  b.config.cameras = {{0, k, look_at({0.0, -1.0, 2.5}, look)},
                      {1, k, look_at({5.5, 1.0, 2.5}, look)}};
  b.config.tracker.measurement_noise = 0.1;
  b.config.zones.push_back({"bay", {{-1.0, 4.0}, {1.0, 4.0}, {1.0, 6.0}, {-1.0, 6.0}}, 0.0, 2.5, true});
  Rule near;
  near.id = "near";
  near.kind = RuleKind::kProximity;
  near.anchor.class_id = 0;
  near.threshold = 1.0;
  b.config.rules.push_back(near);

  b.scene.frame_rate = 10.0;
  b.scene.duration = 30.0;
  const auto walker = [](std::string name, std::vector<std::pair<double, Point3>> knots) {
    Actor a;
    a.name = std::move(name);
    a.shape = Box{};
    a.trajectory.knots = std::move(knots);
    return a;
  };
  // Each walker loops a rectangle, hold position after the last knot.
  std::vector<std::pair<double, Point3>> k1, k2, k3;
  for (int lap = 0; lap < 6; ++lap) {
    const double t = lap * 20.0;
    k1.push_back({t, {-2.0, 3.0, 0.85}});
    k1.push_back({t + 5, {2.0, 3.0, 0.85}});
    k1.push_back({t + 10, {2.0, 7.0, 0.85}});
    k1.push_back({t + 15, {-2.0, 7.0, 0.85}});
    k2.push_back({t, {1.5, 8.0, 0.85}});
    k2.push_back({t + 10, {-1.5, 4.5, 0.85}});
    k3.push_back({t, {-2.5, 6.0, 0.85}});
    k3.push_back({t + 10, {0.5, 6.0, 0.85}});
  }
  b.scene.actors = {walker("w1", k1), walker("w2", k2), walker("w3", k3)};
  b.noise.enabled = true;
  return b;
}

BenchReport run_bench(const BenchSetup& setup, long frames, const fs::path& work_dir,
                      const std::optional<fs::path>& input_dir) {
  if (setup.config.cameras.size() < 2) {
    throw Error(ErrorCode::kConfig, "bench needs two cameras");
  }
  if (frames < 1) throw Error(ErrorCode::kConfig, "bench needs at least one frame");
  fs::create_directories(work_dir);

  BenchReport rep;
  rep.frames = frames;
  rep.hardware_threads = std::thread::hardware_concurrency();
  rep.columns.push_back(bench_memory(setup, 1, frames, "single_camera"));
  rep.columns.push_back(bench_memory(setup, 2, frames, "two_cameras"));

  fs::path input;
  const bool generated = !input_dir;
  if (generated) {
    input = work_dir / "recording";
    fs::remove_all(input);
    const PipelineConfig cfg = with_cameras(setup.config, 2);
    Scene scene = scene_for_config(setup.scene, cfg);
    scene.duration = static_cast<double>(frames - 1) / scene.frame_rate;
    write_simulated_recording(scene, cfg, setup.noise, setup.seed, input,
                              work_dir / "recording_ground_truth.jsonl");
  } else {
    input = *input_dir;
  }
  rep.columns.push_back(bench_files(setup, 1, frames, input, work_dir / "replay_1_file", "1_file"));
  rep.columns.push_back(bench_files(setup, 2, frames, input, work_dir / "replay_2_files", "2_files"));
  if (generated) {
    fs::remove_all(input);
    fs::remove(work_dir / "recording_ground_truth.jsonl");
  }
  return rep;
}

}  // namespace msense
