#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "msense/depth_map.hpp"
#include "msense/geometry.hpp"
#include "msense/pipeline.hpp"
#include "msense/registration.hpp"
#include "msense/tracking.hpp"

namespace msense {

namespace fs = std::filesystem;

// Depth file: "DPT1", little-endian u32 width and height, then width*height
// little-endian float32 meters, row-major. Size is exactly 12 + 4*w*h bytes.
inline constexpr char kDepthMagic[4] = {'D', 'P', 'T', '1'};
std::uintmax_t depth_file_size(int width, int height);
void write_depth_file(std::ostream& os, const DepthMap& depth);
void write_depth_file(const fs::path& path, const DepthMap& depth);
// Throws kInput with the expected and actual byte counts when the size is off.
DepthMap read_depth_file(std::istream& is, std::uintmax_t byte_count, const std::string& name);
DepthMap read_depth_file(const fs::path& path);

// {frame, t, camera_id, class_id, conf, bbox: [x, y, w, h]}
nlohmann::ordered_json detection_to_json(const Detection2D& d);
Detection2D detection_from_json(const nlohmann::json& j);

// One line per recorded frame of a camera: {frame, t, depth}, depth being a
// file name relative to the camera directory.
struct FrameRecord {
  long frame = 0;
  double t = 0.0;
  std::string depth;
};
nlohmann::ordered_json frame_record_to_json(const FrameRecord& r);
FrameRecord frame_record_from_json(const nlohmann::json& j);

// Reads a JSON Lines file, calling `fn(json, line_number)` per non-empty
// line. Parse failures and exceptions from `fn` are rethrown as kInput
// prefixed with "path:line: ".
template <typename Fn>
void for_each_json_line(const fs::path& path, Fn&& fn);

std::vector<Detection2D> read_detections(const fs::path& path);
void write_detections(const fs::path& path, const std::vector<Detection2D>& dets);
std::vector<FrameRecord> read_frame_records(const fs::path& path);
void write_frame_records(const fs::path& path, const std::vector<FrameRecord>& frames);

// Track history line: one per live track per processed bundle.
struct TrackRecord {
  double t = 0.0;
  std::int64_t id = 0;
  TrackStatus status = TrackStatus::kTentative;
  int class_id = 0;
  int hits = 0;
  int misses = 0;
  Point3 position = Point3::Zero();
  Point3 velocity = Point3::Zero();
};
TrackRecord track_record(const Track& track, double t);
nlohmann::ordered_json track_record_to_json(const TrackRecord& r);
TrackRecord track_record_from_json(const nlohmann::json& j);
std::vector<TrackRecord> read_track_records(const fs::path& path);

// Simulator ground truth line: {frame, t, actor, class_id, position}.
struct GroundTruthRecord {
  long frame = 0;
  double t = 0.0;
  std::string actor;
  int class_id = 0;
  Point3 position = Point3::Zero();
};
nlohmann::ordered_json ground_truth_to_json(const GroundTruthRecord& r);
GroundTruthRecord ground_truth_from_json(const nlohmann::json& j);
std::vector<GroundTruthRecord> read_ground_truth(const fs::path& path);

// Summary of a replay run (stats.json).
struct RunStats {
  long frames = 0;
  long partial_bundles = 0;
  std::size_t detections = 0;
  std::size_t dropped_detections = 0;
  std::size_t events = 0;
  std::size_t alarms = 0;
  std::size_t confirmed_tracks = 0;  // distinct ids that reached Confirmed
  double wall_s = 0.0;
  double fps = 0.0;                  // frames / wall_s
  FrameStats mean;                   // per-stage mean durations
};
nlohmann::ordered_json run_stats_to_json(const RunStats& s);
RunStats run_stats_from_json(const nlohmann::json& j);
void write_run_stats(const fs::path& path, const RunStats& s);
RunStats read_run_stats(const fs::path& path);

// Pose file: {rotation: 9 row-major, translation: 3, rms_residual}, with an
// optional "icp" block when a cloud refinement was run.
struct PoseRecord {
  RigidTransform transform;
  double rms_residual = 0.0;
  std::optional<RegistrationResult> icp;
};
nlohmann::ordered_json transform_to_json(const RigidTransform& t);
// Throws kConfig when the rotation is not proper orthonormal.
RigidTransform transform_from_json(const nlohmann::json& j);
nlohmann::ordered_json pose_to_json(const PoseRecord& p);
PoseRecord pose_from_json(const nlohmann::json& j);
void write_pose(const fs::path& path, const PoseRecord& p);
PoseRecord read_pose(const fs::path& path);

// Correspondence lines: {"source": [x, y, z], "target": [x, y, z]}.
CorrespondenceSet read_correspondences(const fs::path& path);
void write_correspondences(const fs::path& path, const CorrespondenceSet& pairs);

nlohmann::json read_json_file(const fs::path& path);
void write_text_file(const fs::path& path, const std::string& text);

nlohmann::ordered_json point_to_json(const Point3& p);
Point3 point_from_json(const nlohmann::json& j);

}  // namespace msense

#include "msense/io_impl.hpp"
