#include "msense/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <thread>

#include "msense/accuracy.hpp"
#include "msense/bench.hpp"
#include "msense/cloud.hpp"
#include "msense/error.hpp"
#include "msense/registration.hpp"

namespace msense {

namespace {

using Clock = std::chrono::steady_clock;

std::string depth_name(long frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06ld.dpt", frame);
  return buf;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::kConfig, std::string("missing required flag ") + flag);
}

}  // namespace

fs::path camera_dir(const fs::path& input_dir, int camera_id) {
  return input_dir / ("cam" + std::to_string(camera_id));
}

std::vector<CameraRecording> load_recordings(const PipelineConfig& cfg, const fs::path& input_dir) {
  if (!fs::is_directory(input_dir)) {
    throw Error(ErrorCode::kInput, input_dir.string() + ": input directory not found");
  }
  std::vector<CameraRecording> out;
  for (const auto& cam : cfg.cameras) {
    CameraRecording rec;
    rec.camera_id = cam.id;
    rec.dir = camera_dir(input_dir, cam.id);
    const fs::path frames = rec.dir / "frames.jsonl";
    const fs::path dets = rec.dir / "detections.jsonl";
    if (!fs::exists(frames)) throw Error(ErrorCode::kInput, frames.string() + ": missing");
    rec.frames = read_frame_records(frames);
    std::set<long> known;
    for (const auto& f : rec.frames) {
      if (!known.insert(f.frame).second) {
        throw Error(ErrorCode::kInput,
                    frames.string() + ": duplicate frame " + std::to_string(f.frame));
      }
    }
    if (fs::exists(dets)) {
      long lineno = 0;
      for (auto& d : read_detections(dets)) {
        ++lineno;
        const std::string where = dets.string() + ":" + std::to_string(lineno) + ": ";
        if (d.camera_id != cam.id) {
          throw Error(ErrorCode::kInput, where + "camera_id " + std::to_string(d.camera_id) +
                                             " in the directory of camera " + std::to_string(cam.id));
        }
        if (!known.contains(d.frame_index)) {
          throw Error(ErrorCode::kInput,
                      where + "frame " + std::to_string(d.frame_index) + " is not in frames.jsonl");
        }
        rec.detections[d.frame_index].push_back(d);
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

RunStats run_replay(const PipelineConfig& cfg, const fs::path& input_dir, const fs::path& output_dir,
                    const ReplayOptions& opts) {
  cfg.validate();
  std::vector<CameraRecording> recs = load_recordings(cfg, input_dir);

  double t_first = INFINITY;
  for (const auto& r : recs)
    if (!r.frames.empty()) t_first = std::min(t_first, r.frames.front().t);
  std::vector<std::vector<double>> stamps(recs.size());
  for (std::size_t c = 0; c < recs.size(); ++c) {
    for (const auto& f : recs[c].frames) {
      if (opts.duration && f.t - t_first > *opts.duration + 1e-9) break;
      stamps[c].push_back(f.t);
    }
  }
  const std::vector<BundlePlan> plans = synchronize(stamps, cfg.sync_window);

  fs::create_directories(output_dir);
  PipelineConfig run_cfg = cfg;
  Pipeline pipe(run_cfg, std::make_unique<FileLineWriter>((output_dir / "events.jsonl").string()));
  std::ofstream tracks(output_dir / "tracks.jsonl", std::ios::trunc);
  if (!tracks) throw Error(ErrorCode::kInput, (output_dir / "tracks.jsonl").string() + ": cannot open");

  RunStats st;
  std::set<std::int64_t> confirmed;
  const auto wall0 = Clock::now();
  for (const auto& plan : plans) {
    if (opts.max_bundles && st.frames >= *opts.max_bundles) break;
    if (opts.realtime) {
      std::this_thread::sleep_until(
          wall0 + std::chrono::duration_cast<Clock::duration>(
                      std::chrono::duration<double>(plan.timestamp - t_first)));
    }
    const auto t_cap = Clock::now();
    FrameBundle bundle;
    bundle.timestamp = plan.timestamp;
    bundle.frames.resize(recs.size());
    for (std::size_t c = 0; c < recs.size(); ++c) {
      if (!plan.frames[c]) continue;
      const FrameRecord& fr = recs[c].frames[*plan.frames[c]];
      CameraFrame frame;
      frame.camera_id = recs[c].camera_id;
      frame.frame_index = fr.frame;
      frame.timestamp = fr.t;
      frame.depth = read_depth_file(recs[c].dir / fr.depth);
      if (auto it = recs[c].detections.find(fr.frame); it != recs[c].detections.end()) {
        frame.detections = it->second;
      }
      bundle.frames[c] = std::move(frame);
    }
    const double capture_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - t_cap).count();

    BundleResult res = pipe.process(bundle, capture_ms);
    for (const auto& t : res.tracks) {
      tracks << track_record_to_json(track_record(t, res.timestamp)).dump() << '\n';
      if (t.status == TrackStatus::kConfirmed) confirmed.insert(t.id);
    }
    ++st.frames;
    if (!plan.complete()) ++st.partial_bundles;
    st.detections += res.stats.detections;
    st.dropped_detections += res.stats.dropped_detections;
    st.events += res.events.size();
    st.mean.capture_ms += res.stats.capture_ms;
    st.mean.lift_ms += res.stats.lift_ms;
    st.mean.fuse_ms += res.stats.fuse_ms;
    st.mean.track_ms += res.stats.track_ms;
    st.mean.rules_ms += res.stats.rules_ms;
    st.mean.total_ms += res.stats.total_ms;
  }
  pipe.flush_notifications();
  tracks.flush();
  if (!tracks) throw Error(ErrorCode::kInput, (output_dir / "tracks.jsonl").string() + ": write failed");

  st.wall_s = std::chrono::duration<double>(Clock::now() - wall0).count();
  st.fps = st.wall_s > 0 ? static_cast<double>(st.frames) / st.wall_s : 0.0;
  st.alarms = pipe.alarms_dispatched();
  st.confirmed_tracks = confirmed.size();
  if (st.frames > 0) {
    const double n = static_cast<double>(st.frames);
    st.mean.capture_ms /= n;
    st.mean.lift_ms /= n;
    st.mean.fuse_ms /= n;
    st.mean.track_ms /= n;
    st.mean.rules_ms /= n;
    st.mean.total_ms /= n;
  }
  st.mean.fps = st.fps;
  write_run_stats(output_dir / "stats.json", st);
  return st;
}

Scene scene_for_config(Scene scene, const PipelineConfig& cfg) {
  std::vector<SimCamera> cams;
  for (const auto& c : cfg.cameras) {
    if (scene.cameras.empty()) {
      cams.push_back({c.id, c.intrinsics, c.pose});
      continue;
    }
    auto it = std::find_if(scene.cameras.begin(), scene.cameras.end(),
                           [&](const SimCamera& s) { return s.id == c.id; });
    if (it == scene.cameras.end()) {
      throw Error(ErrorCode::kConfig,
                  "scene has no camera with id " + std::to_string(c.id) + " from the config");
    }
    if (it->intrinsics.width != c.intrinsics.width || it->intrinsics.height != c.intrinsics.height) {
      throw Error(ErrorCode::kConfig,
                  "scene camera " + std::to_string(c.id) + " image size differs from the config");
    }
    cams.push_back(*it);
  }
  scene.cameras = std::move(cams);
  return scene;
}

long write_simulated_recording(const Scene& scene_in, const PipelineConfig& cfg,
                               const std::optional<NoiseModel>& noise, std::uint64_t seed,
                               const fs::path& input_dir, const fs::path& ground_truth_path) {
  const Scene scene = scene_for_config(scene_in, cfg);
  scene.validate();
  const long frames = scene.frame_count();
  const bool noisy = noise && noise->enabled;

  for (std::size_t ci = 0; ci < scene.cameras.size(); ++ci) {
    const SimCamera& cam = scene.cameras[ci];
    const fs::path dir = camera_dir(input_dir, cam.id);
    fs::create_directories(dir);
    std::vector<FrameRecord> records;
    std::vector<Detection2D> dets;
    const std::uint64_t cam_seed = derive_seed(seed, static_cast<std::uint64_t>(ci));
    for (long f = 0; f < frames; ++f) {
      const double t = scene.frame_time(f);
      DepthMap depth = render_depth(scene, ci, t);
      if (noisy) depth = apply_noise(depth, cam.intrinsics, *noise, derive_seed(cam_seed, f));
      const std::string name = depth_name(f);
      write_depth_file(dir / name, depth);
      records.push_back({f, t, name});
      auto d = synth_detections(scene, ci, t, f);
      dets.insert(dets.end(), d.begin(), d.end());
    }
    write_frame_records(dir / "frames.jsonl", records);
    write_detections(dir / "detections.jsonl", dets);
  }

  std::vector<GroundTruthRecord> gt;
  for (long f = 0; f < frames; ++f) {
    const double t = scene.frame_time(f);
    for (const auto& a : scene.actors) gt.push_back({f, t, a.name, a.class_id, a.trajectory.at(t)});
  }
  std::ofstream out(ground_truth_path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kInput, ground_truth_path.string() + ": cannot open");
  for (const auto& r : gt) out << ground_truth_to_json(r).dump() << '\n';
  return frames;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kConfig:
    case ErrorCode::kDegenerateInput:
    case ErrorCode::kDomain:
      return 2;
    case ErrorCode::kInput:
    case ErrorCode::kOrdering:
    case ErrorCode::kInvalidDepth:
    case ErrorCode::kNoOverlap:
      return 3;
    default:
      return 1;
  }
}

namespace {

void print_run_summary(std::ostream& out, const RunStats& s, const fs::path& output) {
  out << "frames " << s.frames << " (partial " << s.partial_bundles << "), detections "
      << s.detections << " (dropped " << s.dropped_detections << "), events " << s.events
      << ", alarms " << s.alarms << ", confirmed tracks " << s.confirmed_tracks << "\n";
  out << std::fixed << std::setprecision(2) << "mean ms: capture " << s.mean.capture_ms
      << " lift " << s.mean.lift_ms << " fuse " << s.mean.fuse_ms << " track " << s.mean.track_ms
      << " rules " << s.mean.rules_ms << " total " << s.mean.total_ms << ", fps " << s.fps << "\n";
  out.unsetf(std::ios::fixed);
  out << "wrote " << (output / "events.jsonl").string() << ", tracks.jsonl, stats.json\n";
}

}  // namespace

int cmd_run(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require(o.config, "--config");
    require(o.input, "--input");
    require(o.output, "--output");
    const PipelineConfig cfg = load_pipeline_config(o.config);
    ReplayOptions opts;
    opts.realtime = o.realtime;
    opts.duration = o.duration;
    opts.max_bundles = o.frames;
    const RunStats s = run_replay(cfg, o.input, o.output, opts);
    print_run_summary(out, s, o.output);
    return 0;
  });
}

int cmd_simulate(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require(o.config, "--config");
    require(o.output, "--output");
    const PipelineConfig cfg = load_pipeline_config(o.config);
    const std::string scene_path = !o.input.empty() ? o.input : cfg.sim.scene_path;
    if (scene_path.empty()) {
      throw Error(ErrorCode::kConfig, "no scene: set sim.scene in the config or pass --input");
    }
    SceneFile sf = load_scene(scene_path);
    if (o.duration) sf.scene.duration = *o.duration;
    const std::optional<NoiseModel> noise = cfg.sim.noise ? cfg.sim.noise : sf.noise;
    const std::uint64_t seed = o.seed.value_or(cfg.sim.seed);
    const fs::path output = o.output;
    const fs::path input = output / "input";
    fs::create_directories(output);
    const long frames =
        write_simulated_recording(sf.scene, cfg, noise, seed, input, output / "ground_truth.jsonl");
    out << "rendered " << frames << " frames x " << cfg.cameras.size() << " cameras into "
        << input.string() << "\n";
    ReplayOptions opts;
    opts.realtime = o.realtime;
    const RunStats s = run_replay(cfg, input, output, opts);
    print_run_summary(out, s, output);
    return 0;
  });
}

int cmd_calibrate(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require(o.input, "--input");
    if (o.source_ply.empty() != o.target_ply.empty()) {
      throw Error(ErrorCode::kConfig, "--source and --target must be given together");
    }
    const CorrespondenceSet pairs = read_correspondences(o.input);
    PoseRecord pose;
    pose.transform = estimate_rigid(pairs);
    double ss = 0.0;
    for (const auto& c : pairs) ss += (pose.transform.apply(c.source) - c.target).squaredNorm();
    pose.rms_residual = std::sqrt(ss / static_cast<double>(pairs.size()));
    out << "correspondences " << pairs.size() << ", rms residual " << pose.rms_residual << " m\n";
    if (!o.source_ply.empty()) {
      const PointCloud src = read_ply(o.source_ply);
      const PointCloud tgt = read_ply(o.target_ply);
      pose.icp = icp_refine(src, tgt, pose.transform, IcpParams{});
      out << "icp: " << pose.icp->iterations << " iterations, "
          << (pose.icp->converged ? "converged" : "not converged") << ", rms residual "
          << pose.icp->rms_residual << " m\n";
    }
    const fs::path path = o.output.empty() ? fs::path("pose.json") : fs::path(o.output);
    write_pose(path, pose);
    out << "wrote " << path.string() << "\n";
    return 0;
  });
}

int cmd_accuracy(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    AccuracyConfig cfg = o.config.empty() ? default_accuracy_config() : load_accuracy_config(o.config);
    if (o.seed) {
      for (std::size_t i = 0; i < cfg.conditions.size(); ++i) cfg.conditions[i].seed = *o.seed + i;
    }
    const fs::path output = o.output.empty() ? fs::path("accuracy") : fs::path(o.output);
    const auto t0 = Clock::now();
    const AccuracyResult res = run_accuracy_experiment(cfg);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();

    std::vector<const HeatmapReport*> all;
    for (const auto& r : res.conditions) all.push_back(&r);
    all.push_back(&res.average);
    out << std::left << std::setw(24) << "condition" << std::right << std::setw(9) << "stations"
        << std::setw(9) << "missing" << std::setw(12) << "mean_err" << std::setw(12) << "max_err"
        << std::setw(8) << "green" << "\n";
    for (const HeatmapReport* r : all) {
      const fs::path dir = output / r->name;
      fs::create_directories(dir);
      {
        std::ofstream csv(dir / "heatmap.csv", std::ios::trunc);
        write_heatmap_csv(csv, *r);
        std::ofstream ppm(dir / "heatmap.ppm", std::ios::binary | std::ios::trunc);
        write_heatmap_ppm(ppm, *r, cfg);
        if (!csv || !ppm) throw Error(ErrorCode::kInput, dir.string() + ": write failed");
      }
      int missing = 0, green = 0;
      double sum = 0.0, worst = 0.0;
      for (const auto& c : r->cells) {
        if (c.missing()) {
          ++missing;
          continue;
        }
        sum += c.abs_error;
        worst = std::max(worst, c.abs_error);
        if (c.abs_error <= kGreenMaxError) ++green;
      }
      const int measured = static_cast<int>(r->cells.size()) - missing;
      out << std::left << std::setw(24) << r->name << std::right << std::setw(9) << r->cells.size()
          << std::setw(9) << missing << std::fixed << std::setprecision(4) << std::setw(12)
          << (measured ? sum / measured : NAN) << std::setw(12) << worst << std::setw(8) << green
          << "\n";
      out.unsetf(std::ios::fixed);
    }
    out << "wrote " << all.size() << " heatmaps under " << output.string() << " in " << std::fixed
        << std::setprecision(2) << secs << " s\n";
    out.unsetf(std::ios::fixed);
    return 0;
  });
}

int cmd_bench(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    BenchSetup setup = default_bench_setup();
    if (!o.config.empty()) {
      PipelineConfig cfg = load_pipeline_config(o.config);
      if (cfg.cameras.size() < 2) {
        throw Error(ErrorCode::kConfig, "bench needs a config with at least two cameras");
      }
      cfg.cameras.resize(2);
      setup.config = cfg;
      if (!cfg.sim.scene_path.empty()) {
        SceneFile sf = load_scene(cfg.sim.scene_path);
        setup.scene = sf.scene;
        if (cfg.sim.noise) {
          setup.noise = *cfg.sim.noise;
        } else if (sf.noise) {
          setup.noise = *sf.noise;
        }
      } else {
        setup.scene.cameras.clear();
      }
      setup.seed = cfg.sim.seed;
    }
    if (o.seed) setup.seed = *o.seed;
    setup.config.sinks.clear();
    long frames = 300;
    if (o.frames) {
      frames = *o.frames;
    } else if (o.duration) {
      frames = std::lround(*o.duration * setup.scene.frame_rate);
    }
    if (frames < 1) throw Error(ErrorCode::kConfig, "bench needs at least one frame");
    const fs::path output = o.output.empty() ? fs::path("bench") : fs::path(o.output);
    std::optional<fs::path> input;
    if (!o.input.empty()) input = fs::path(o.input);
    const BenchReport rep = run_bench(setup, frames, output, input);
    write_text_file(output / "bench.json", bench_report_to_json(rep).dump(2) + "\n");
    out << format_bench_table(rep);
    out << "wrote " << (output / "bench.json").string() << "\n";
    return 0;
  });
}

}  // namespace msense
