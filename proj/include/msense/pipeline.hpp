#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msense/cloud.hpp"
#include "msense/event_log.hpp"
#include "msense/geometry.hpp"
#include "msense/rules.hpp"
#include "msense/sim.hpp"
#include "msense/sinks.hpp"
#include "msense/tracking.hpp"
#include "msense/zones.hpp"

namespace msense {

struct CameraConfig {
  int id = 0;
  CameraIntrinsics intrinsics;
  RigidTransform pose;  // camera-to-world; camera 0 usually anchors the world
};

struct FusionParams {
  double voxel_size = 0.05;   // meters
  double merge_radius = 0.5;  // meters, cross-camera duplicate radius
  int cloud_stride = 4;       // pixels between back-projected depth samples
};

enum class InputMode { kReplay, kSimulate };

struct SimSettings {
  std::string scene_path;
  std::uint64_t seed = 0;
  std::optional<NoiseModel> noise;  // overrides the scene's noise block
};

struct PipelineConfig {
  std::vector<CameraConfig> cameras;
  double sync_window = 0.05;  // seconds
  FusionParams fusion;
  TrackerParams tracker;
  std::vector<Zone> zones;
  std::vector<Rule> rules;
  std::vector<SinkSpec> sinks;
  int zone_debounce_frames = 2;
  InputMode mode = InputMode::kReplay;
  SimSettings sim;

  // Throws kConfig.
  void validate() const;
  std::size_t camera_index(int camera_id) const;
};

struct CameraFrame {
  int camera_id = 0;
  long frame_index = 0;
  double timestamp = 0.0;
  DepthMap depth;
  std::vector<Detection2D> detections;
};

struct FrameBundle {
  double timestamp = 0.0;
  std::vector<std::optional<CameraFrame>> frames;  // one slot per configured camera

  bool complete() const;
};

// Frame chosen from each camera stream for one bundle.
struct BundlePlan {
  double timestamp = 0.0;
  std::vector<std::optional<std::size_t>> frames;
  bool complete() const;
};

// Groups per-camera timestamp streams into bundles. The earliest unused frame
// anchors a bundle; every other camera contributes its earliest unused frame
// within `window` of the anchor, unless that frame is strictly closer to the
// anchor camera's next frame. Frames are used at most once. Throws kOrdering
// on an unsorted stream.
std::vector<BundlePlan> synchronize(std::span<const std::vector<double>> timestamps, double window);

struct FrameStats {
  double capture_ms = 0.0;
  double lift_ms = 0.0;
  double fuse_ms = 0.0;
  double track_ms = 0.0;
  double rules_ms = 0.0;
  double total_ms = 0.0;
  std::size_t detections = 0;
  std::size_t dropped_detections = 0;
  std::size_t fused_objects = 0;
  std::size_t cloud_points = 0;
  double fps = 0.0;  // frames completed in the last second of wall time
};

struct BundleResult {
  double timestamp = 0.0;
  std::vector<Object3D> objects;
  PointCloud cloud;
  std::vector<Track> tracks;
  std::vector<std::int64_t> born;
  std::vector<std::int64_t> dead;
  std::vector<Event> events;
  FrameStats stats;
};

// Greedy cross-camera merge: objects are visited by descending confidence and
// join the first cluster of the same class, from a different camera, whose
// seed centroid is within `radius`. A cluster keeps its seed's box, class and
// confidence and reports the mean centroid.
std::vector<Object3D> merge_cross_camera(std::span<const Object3D> objects, double radius);

// Frames per second over a sliding one-second window.
class FpsMeter {
 public:
  using Clock = std::chrono::steady_clock;
  double tick(Clock::time_point now = Clock::now());

 private:
  std::deque<Clock::time_point> stamps_;
};

// Lift -> fuse -> track -> zones/rules -> log and notify, one bundle at a
// time. Alarm notifications reach the sinks in bundle order.
class Pipeline {
 public:
  // `event_writer` receives the events.jsonl lines. When `sinks` is empty the
  // configured SinkSpecs are instantiated instead.
  Pipeline(PipelineConfig config, std::unique_ptr<LineWriter> event_writer,
           std::vector<std::unique_ptr<NotificationSink>> sinks = {});

  BundleResult process(const FrameBundle& bundle, double capture_ms = 0.0);

  void flush_notifications() { dispatcher_.flush(); }
  std::size_t alarms_dispatched() const { return alarms_; }
  const PipelineConfig& config() const { return config_; }
  EventLog& log() { return log_; }

 private:
  struct Lifted {
    std::vector<Object3D> objects;
    PointCloud cloud;
    std::size_t detections = 0;
    std::size_t dropped = 0;
  };

  Lifted lift(std::size_t camera_index, const CameraFrame& frame) const;

  PipelineConfig config_;
  Tracker tracker_;
  ZoneMonitor zones_;
  RuleEngine rules_;
  EventLog log_;
  SinkDispatcher dispatcher_;
  FpsMeter fps_;
  std::size_t alarms_ = 0;
};

}  // namespace msense
