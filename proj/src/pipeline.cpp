#include "msense/pipeline.hpp"

#include <algorithm>
#include <future>
#include <numeric>
#include <set>
#include <sstream>

#include "msense/error.hpp"

namespace msense {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<std::unique_ptr<NotificationSink>> build_sinks(
    const PipelineConfig& cfg, std::vector<std::unique_ptr<NotificationSink>> given) {
  if (!given.empty()) return given;
  std::vector<std::unique_ptr<NotificationSink>> out;
  for (const auto& spec : cfg.sinks) out.push_back(make_sink(spec));
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  const auto fail = [](const std::string& why) { throw Error(ErrorCode::kConfig, why); };
  if (cameras.empty()) fail("config needs at least one camera");
  std::set<int> ids;
  for (const auto& c : cameras) {
    if (!ids.insert(c.id).second) fail("duplicate camera id " + std::to_string(c.id));
    if (!c.intrinsics.is_valid()) fail("camera " + std::to_string(c.id) + ": invalid intrinsics");
    if (!c.pose.is_valid(1e-6)) fail("camera " + std::to_string(c.id) + ": pose is not rigid");
  }
  if (!(sync_window > 0)) fail("sync_window_s must be > 0");
  if (!(fusion.voxel_size > 0)) fail("fusion.voxel_size must be > 0");
  if (!(fusion.merge_radius >= 0)) fail("fusion.merge_radius must be >= 0");
  if (fusion.cloud_stride < 1) fail("fusion.cloud_stride must be >= 1");
  try {
    tracker.validate();
  } catch (const Error& e) {
    fail(std::string("tracker: ") + e.what());
  }
  if (zone_debounce_frames < 1) fail("zone_debounce_frames must be >= 1");
  for (const auto& z : zones) z.validate();
  std::set<std::string> zone_ids, rule_ids;
  for (const auto& z : zones)
    if (!zone_ids.insert(z.id).second) fail("duplicate zone id '" + z.id + "'");
  for (const auto& r : rules) {
    r.validate();
    if (!rule_ids.insert(r.id).second) fail("duplicate rule id '" + r.id + "'");
    if (r.kind == RuleKind::kZoneOccupancy && !zone_ids.contains(r.zone_id)) {
      fail("rule '" + r.id + "' references unknown zone '" + r.zone_id + "'");
    }
  }
}

std::size_t PipelineConfig::camera_index(int camera_id) const {
  for (std::size_t i = 0; i < cameras.size(); ++i)
    if (cameras[i].id == camera_id) return i;
  throw Error(ErrorCode::kInput, "unknown camera id " + std::to_string(camera_id));
}

bool FrameBundle::complete() const {
  return std::all_of(frames.begin(), frames.end(), [](const auto& f) { return f.has_value(); });
}

bool BundlePlan::complete() const {
  return std::all_of(frames.begin(), frames.end(), [](const auto& f) { return f.has_value(); });
}

std::vector<BundlePlan> synchronize(std::span<const std::vector<double>> timestamps, double window) {
  const std::size_t nc = timestamps.size();
  for (std::size_t c = 0; c < nc; ++c) {
    if (!std::is_sorted(timestamps[c].begin(), timestamps[c].end())) {
      throw Error(ErrorCode::kOrdering,
                  "camera stream " + std::to_string(c) + " has decreasing timestamps");
    }
  }
  std::vector<std::size_t> next(nc, 0);
  std::vector<BundlePlan> out;
  for (;;) {
    // Anchor: earliest unused frame, lowest camera index on ties.
    std::optional<std::size_t> anchor;
    for (std::size_t c = 0; c < nc; ++c) {
      if (next[c] >= timestamps[c].size()) continue;
      if (!anchor || timestamps[c][next[c]] < timestamps[*anchor][next[*anchor]]) anchor = c;
    }
    if (!anchor) break;
    const std::size_t a = *anchor;
    const double t0 = timestamps[a][next[a]];
    const std::optional<double> t_next =
        next[a] + 1 < timestamps[a].size() ? std::optional(timestamps[a][next[a] + 1]) : std::nullopt;

    BundlePlan plan;
    plan.timestamp = t0;
    plan.frames.assign(nc, std::nullopt);
    plan.frames[a] = next[a]++;
    for (std::size_t c = 0; c < nc; ++c) {
      if (c == a || next[c] >= timestamps[c].size()) continue;
      const double s = timestamps[c][next[c]];
      if (s - t0 > window) continue;
      if (t_next && *t_next - s < s - t0) continue;  // belongs with the next anchor
      plan.frames[c] = next[c]++;
    }
    out.push_back(std::move(plan));
  }
  return out;
}

std::vector<Object3D> merge_cross_camera(std::span<const Object3D> objects, double radius) {
  std::vector<std::size_t> order(objects.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return objects[a].confidence > objects[b].confidence;
  });

  struct Cluster {
    Object3D seed;
    Point3 sum;
    int count;
    std::set<int> cameras;
  };
  std::vector<Cluster> clusters;
  for (std::size_t i : order) {
    const Object3D& o = objects[i];
    Cluster* home = nullptr;
    for (auto& c : clusters) {
      if (c.seed.class_id != o.class_id || c.cameras.contains(o.camera_id)) continue;
      if ((c.seed.centroid - o.centroid).norm() < radius) {
        home = &c;
        break;
      }
    }
    if (home) {
      home->sum += o.centroid;
      home->count += 1;
      home->cameras.insert(o.camera_id);
    } else {
      clusters.push_back({o, o.centroid, 1, {o.camera_id}});
    }
  }
  std::vector<Object3D> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) {
    Object3D o = c.seed;
    o.centroid = c.sum / c.count;
    o.aabb.expand(o.centroid);
    out.push_back(o);
  }
  return out;
}

double FpsMeter::tick(Clock::time_point now) {
  stamps_.push_back(now);
  while (!stamps_.empty() && now - stamps_.front() > std::chrono::seconds(1)) stamps_.pop_front();
  if (stamps_.size() < 2) return 0.0;
  double span = std::chrono::duration<double>(stamps_.back() - stamps_.front()).count();
  return span > 0 ? static_cast<double>(stamps_.size() - 1) / span : 0.0;
}

Pipeline::Pipeline(PipelineConfig config, std::unique_ptr<LineWriter> event_writer,
                   std::vector<std::unique_ptr<NotificationSink>> sinks)
    : config_((config.validate(), std::move(config))),
      tracker_(config_.tracker),
      zones_(config_.zones, config_.zone_debounce_frames),
      rules_(config_.rules),
      log_(event_writer ? std::move(event_writer) : std::make_unique<StringLineWriter>()),
      dispatcher_(build_sinks(config_, std::move(sinks))) {}

Pipeline::Lifted Pipeline::lift(std::size_t ci, const CameraFrame& frame) const {
  const CameraConfig& cam = config_.cameras[ci];
  Lifted out;
  for (const auto& d : frame.detections) {
    ++out.detections;
    try {
      Object3D o = bbox_to_object3d(d, frame.depth, cam.intrinsics, cam.pose);
      o.camera_id = cam.id;
      o.timestamp = frame.timestamp;
      out.objects.push_back(o);
    } catch (const Error&) {
      ++out.dropped;  // no depth, or a box outside the image
    }
  }
  out.cloud = cloud_from_depth(frame.depth, cam.intrinsics, cam.pose, config_.fusion.cloud_stride,
                               cam.id);
  return out;
}

BundleResult Pipeline::process(const FrameBundle& bundle, double capture_ms) {
  const auto t_start = Clock::now();
  if (bundle.frames.size() != config_.cameras.size()) {
    throw Error(ErrorCode::kInput, "bundle has the wrong number of camera slots");
  }
  for (std::size_t c = 0; c < bundle.frames.size(); ++c) {
    const auto& f = bundle.frames[c];
    const auto& k = config_.cameras[c].intrinsics;
    if (f && (f->depth.width != k.width || f->depth.height != k.height)) {
      throw Error(ErrorCode::kInput, "camera " + std::to_string(config_.cameras[c].id) +
                                         ": depth map is " + std::to_string(f->depth.width) + "x" +
                                         std::to_string(f->depth.height) + ", intrinsics say " +
                                         std::to_string(k.width) + "x" + std::to_string(k.height));
    }
  }
  BundleResult out;
  out.timestamp = bundle.timestamp;
  FrameStats& st = out.stats;
  st.capture_ms = capture_ms;

  // Lift: cameras are independent until fusion.
  auto t0 = Clock::now();
  std::vector<Lifted> lifted(config_.cameras.size());
  std::vector<std::future<Lifted>> jobs(config_.cameras.size());
  for (std::size_t c = 0; c < config_.cameras.size(); ++c) {
    if (!bundle.frames[c]) continue;
    if (c + 1 == config_.cameras.size()) {
      lifted[c] = lift(c, *bundle.frames[c]);
    } else {
      jobs[c] = std::async(std::launch::async, [this, c, &bundle] { return lift(c, *bundle.frames[c]); });
    }
  }
  for (std::size_t c = 0; c < jobs.size(); ++c)
    if (jobs[c].valid()) lifted[c] = jobs[c].get();
  st.lift_ms = ms_since(t0);

  // Fuse.
  t0 = Clock::now();
  std::vector<Object3D> all;
  std::vector<PointCloud> clouds;
  for (auto& l : lifted) {
    st.detections += l.detections;
    st.dropped_detections += l.dropped;
    all.insert(all.end(), l.objects.begin(), l.objects.end());
    clouds.push_back(std::move(l.cloud));
  }
  out.objects = merge_cross_camera(all, config_.fusion.merge_radius);
  for (auto& o : out.objects) o.timestamp = bundle.timestamp;
  out.cloud = voxel_downsample(merge_clouds(clouds), config_.fusion.voxel_size);
  st.fused_objects = out.objects.size();
  st.cloud_points = out.cloud.size();
  st.fuse_ms = ms_since(t0);

  // Track.
  t0 = Clock::now();
  StepResult step = tracker_.step(out.objects, bundle.timestamp);
  out.tracks = std::move(step.tracks);
  out.born = std::move(step.born);
  out.dead = std::move(step.dead);
  st.track_ms = ms_since(t0);

  // Zones and rules see confirmed tracks only.
  t0 = Clock::now();
  std::vector<Track> confirmed;
  for (const auto& t : out.tracks)
    if (t.status == TrackStatus::kConfirmed) confirmed.push_back(t);
  out.events = zones_.step(confirmed, bundle.timestamp);
  auto rule_events = rules_.step(confirmed, bundle.timestamp, zones_.occupants());
  out.events.insert(out.events.end(), rule_events.begin(), rule_events.end());
  for (const auto& e : out.events) {
    Receipt r = log_.append(e);
    if (zones_.is_alarm(e)) {
      dispatcher_.dispatch(event_to_json(e, r.seq).dump());
      ++alarms_;
    }
  }
  st.rules_ms = ms_since(t0);

  st.total_ms = capture_ms + ms_since(t_start);
  st.fps = fps_.tick();
  return out;
}

}  // namespace msense
