#include "msense/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "msense/error.hpp"

namespace msense {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kInput, path.string() + ": cannot open for writing");
  return out;
}

template <typename T, typename ToJson>
void write_lines(const fs::path& path, const std::vector<T>& items, ToJson to_json) {
  auto out = open_out(path);
  for (const auto& item : items) out << to_json(item).dump() << '\n';
  if (!out) throw Error(ErrorCode::kInput, path.string() + ": write failed");
}

}  // namespace

ordered_json point_to_json(const Point3& p) { return ordered_json::array({p.x(), p.y(), p.z()}); }

Point3 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kInput, "expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::uintmax_t depth_file_size(int width, int height) {
  return 12 + 4 * static_cast<std::uintmax_t>(width) * static_cast<std::uintmax_t>(height);
}

void write_depth_file(std::ostream& os, const DepthMap& depth) {
  os.write(kDepthMagic, 4);
  put_u32(os, static_cast<std::uint32_t>(depth.width));
  put_u32(os, static_cast<std::uint32_t>(depth.height));
  static_assert(sizeof(float) == 4);
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(depth.values.data()),
             static_cast<std::streamsize>(depth.values.size() * 4));
  } else {
    for (float f : depth.values) put_u32(os, std::bit_cast<std::uint32_t>(f));
  }
}

void write_depth_file(const fs::path& path, const DepthMap& depth) {
  auto out = open_out(path, std::ios::binary);
  write_depth_file(out, depth);
  if (!out) throw Error(ErrorCode::kInput, path.string() + ": write failed");
}

DepthMap read_depth_file(std::istream& is, std::uintmax_t byte_count, const std::string& name) {
  unsigned char header[12];
  if (byte_count < 12 || !is.read(reinterpret_cast<char*>(header), 12)) {
    throw Error(ErrorCode::kInput, name + ": truncated header: expected at least 12 bytes, got " +
                                       std::to_string(byte_count));
  }
  if (std::memcmp(header, kDepthMagic, 4) != 0) {
    throw Error(ErrorCode::kInput, name + ": bad magic, expected DPT1");
  }
  const std::uint32_t w = get_u32(header + 4);
  const std::uint32_t h = get_u32(header + 8);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) {
    throw Error(ErrorCode::kInput, name + ": implausible size " + std::to_string(w) + "x" +
                                       std::to_string(h));
  }
  const std::uintmax_t expected = depth_file_size(static_cast<int>(w), static_cast<int>(h));
  if (byte_count != expected) {
    throw Error(ErrorCode::kInput, name + ": expected " + std::to_string(expected) +
                                       " bytes for " + std::to_string(w) + "x" + std::to_string(h) +
                                       ", got " + std::to_string(byte_count));
  }
  DepthMap d(static_cast<int>(w), static_cast<int>(h));
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 4);
  if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw Error(ErrorCode::kInput, name + ": short read");
  }
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    d.values[i] = std::bit_cast<float>(get_u32(raw.data() + 4 * i));
  }
  return d;
}

DepthMap read_depth_file(const fs::path& path) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw Error(ErrorCode::kInput, path.string() + ": cannot stat: " + ec.message());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInput, path.string() + ": cannot open");
  return read_depth_file(in, size, path.string());
}

ordered_json detection_to_json(const Detection2D& d) {
  ordered_json j;
  j["frame"] = d.frame_index;
  j["t"] = d.timestamp;
  j["camera_id"] = d.camera_id;
  j["class_id"] = d.class_id;
  j["conf"] = d.confidence;
  j["bbox"] = {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h};
  return j;
}

Detection2D detection_from_json(const json& j) {
  Detection2D d;
  d.frame_index = j.at("frame").get<long>();
  d.timestamp = j.at("t").get<double>();
  d.camera_id = j.at("camera_id").get<int>();
  d.class_id = j.at("class_id").get<int>();
  d.confidence = j.at("conf").get<double>();
  const json& b = j.at("bbox");
  if (!b.is_array() || b.size() != 4) throw Error(ErrorCode::kInput, "bbox must be [x, y, w, h]");
  d.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  if (!(d.bbox.w > 0 && d.bbox.h > 0)) throw Error(ErrorCode::kInput, "bbox has no area");
  return d;
}

ordered_json frame_record_to_json(const FrameRecord& r) {
  ordered_json j;
  j["frame"] = r.frame;
  j["t"] = r.t;
  j["depth"] = r.depth;
  return j;
}

FrameRecord frame_record_from_json(const json& j) {
  return {j.at("frame").get<long>(), j.at("t").get<double>(), j.at("depth").get<std::string>()};
}

std::vector<Detection2D> read_detections(const fs::path& path) {
  std::vector<Detection2D> out;
  for_each_json_line(path, [&](const json& j, long) {
    Detection2D d = detection_from_json(j);
    if (!out.empty() && d.timestamp < out.back().timestamp) {
      throw Error(ErrorCode::kOrdering, "timestamp decreases");
    }
    out.push_back(d);
  });
  return out;
}

void write_detections(const fs::path& path, const std::vector<Detection2D>& dets) {
  write_lines(path, dets, detection_to_json);
}

std::vector<FrameRecord> read_frame_records(const fs::path& path) {
  std::vector<FrameRecord> out;
  for_each_json_line(path, [&](const json& j, long) {
    FrameRecord r = frame_record_from_json(j);
    if (!out.empty() && r.t < out.back().t) throw Error(ErrorCode::kOrdering, "timestamp decreases");
    out.push_back(std::move(r));
  });
  return out;
}

void write_frame_records(const fs::path& path, const std::vector<FrameRecord>& frames) {
  write_lines(path, frames, frame_record_to_json);
}

TrackRecord track_record(const Track& track, double t) {
  return {t,           track.id,     track.status,     track.class_id,
          track.hits,  track.misses, track.position(), track.velocity()};
}

ordered_json track_record_to_json(const TrackRecord& r) {
  ordered_json j;
  j["t"] = r.t;
  j["id"] = r.id;
  j["status"] = std::string(to_string(r.status));
  j["class_id"] = r.class_id;
  j["hits"] = r.hits;
  j["misses"] = r.misses;
  j["position"] = point_to_json(r.position);
  j["velocity"] = point_to_json(r.velocity);
  return j;
}

TrackRecord track_record_from_json(const json& j) {
  TrackRecord r;
  r.t = j.at("t").get<double>();
  r.id = j.at("id").get<std::int64_t>();
  const auto s = j.at("status").get<std::string>();
  bool known = false;
  for (auto st : {TrackStatus::kTentative, TrackStatus::kConfirmed, TrackStatus::kDeleted}) {
    if (to_string(st) == s) {
      r.status = st;
      known = true;
    }
  }
  if (!known) throw Error(ErrorCode::kInput, "unknown track status '" + s + "'");
  r.class_id = j.at("class_id").get<int>();
  r.hits = j.at("hits").get<int>();
  r.misses = j.at("misses").get<int>();
  r.position = point_from_json(j.at("position"));
  r.velocity = point_from_json(j.at("velocity"));
  return r;
}

std::vector<TrackRecord> read_track_records(const fs::path& path) {
  std::vector<TrackRecord> out;
  for_each_json_line(path, [&](const json& j, long) { out.push_back(track_record_from_json(j)); });
  return out;
}

ordered_json ground_truth_to_json(const GroundTruthRecord& r) {
  ordered_json j;
  j["frame"] = r.frame;
  j["t"] = r.t;
  j["actor"] = r.actor;
  j["class_id"] = r.class_id;
  j["position"] = point_to_json(r.position);
  return j;
}

GroundTruthRecord ground_truth_from_json(const json& j) {
  return {j.at("frame").get<long>(), j.at("t").get<double>(), j.at("actor").get<std::string>(),
          j.at("class_id").get<int>(), point_from_json(j.at("position"))};
}

std::vector<GroundTruthRecord> read_ground_truth(const fs::path& path) {
  std::vector<GroundTruthRecord> out;
  for_each_json_line(path, [&](const json& j, long) { out.push_back(ground_truth_from_json(j)); });
  return out;
}

ordered_json run_stats_to_json(const RunStats& s) {
  ordered_json j;
  j["frames"] = s.frames;
  j["partial_bundles"] = s.partial_bundles;
  j["detections"] = s.detections;
  j["dropped_detections"] = s.dropped_detections;
  j["events"] = s.events;
  j["alarms"] = s.alarms;
  j["confirmed_tracks"] = s.confirmed_tracks;
  j["wall_s"] = s.wall_s;
  j["fps"] = s.fps;
  ordered_json m;
  m["capture"] = s.mean.capture_ms;
  m["lift"] = s.mean.lift_ms;
  m["fuse"] = s.mean.fuse_ms;
  m["track"] = s.mean.track_ms;
  m["rules"] = s.mean.rules_ms;
  m["total"] = s.mean.total_ms;
  j["mean_stage_ms"] = std::move(m);
  return j;
}

RunStats run_stats_from_json(const json& j) {
  RunStats s;
  s.frames = j.at("frames").get<long>();
  s.partial_bundles = j.at("partial_bundles").get<long>();
  s.detections = j.at("detections").get<std::size_t>();
  s.dropped_detections = j.at("dropped_detections").get<std::size_t>();
  s.events = j.at("events").get<std::size_t>();
  s.alarms = j.at("alarms").get<std::size_t>();
  s.confirmed_tracks = j.at("confirmed_tracks").get<std::size_t>();
  s.wall_s = j.at("wall_s").get<double>();
  s.fps = j.at("fps").get<double>();
  const json& m = j.at("mean_stage_ms");
  s.mean.capture_ms = m.at("capture").get<double>();
  s.mean.lift_ms = m.at("lift").get<double>();
  s.mean.fuse_ms = m.at("fuse").get<double>();
  s.mean.track_ms = m.at("track").get<double>();
  s.mean.rules_ms = m.at("rules").get<double>();
  s.mean.total_ms = m.at("total").get<double>();
  return s;
}

void write_run_stats(const fs::path& path, const RunStats& s) {
  write_text_file(path, run_stats_to_json(s).dump(2) + "\n");
}

RunStats read_run_stats(const fs::path& path) { return run_stats_from_json(read_json_file(path)); }

ordered_json transform_to_json(const RigidTransform& t) {
  ordered_json j;
  ordered_json r = ordered_json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r.push_back(t.rotation(i, k));
  j["rotation"] = std::move(r);
  j["translation"] = point_to_json(t.translation);
  return j;
}

RigidTransform transform_from_json(const json& j) {
  const json& r = j.at("rotation");
  const json& tr = j.at("translation");
  if (!r.is_array() || r.size() != 9) throw Error(ErrorCode::kConfig, "rotation needs 9 numbers");
  if (!tr.is_array() || tr.size() != 3) {
    throw Error(ErrorCode::kConfig, "translation needs 3 numbers");
  }
  RigidTransform t;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) t.rotation(i, k) = r[3 * i + k].get<double>();
  t.translation = {tr[0].get<double>(), tr[1].get<double>(), tr[2].get<double>()};
  if (!t.is_valid(1e-6)) throw Error(ErrorCode::kConfig, "rotation is not a proper rotation");
  return t;
}

ordered_json pose_to_json(const PoseRecord& p) {
  ordered_json j = transform_to_json(p.transform);
  j["rms_residual"] = p.rms_residual;
  if (p.icp) {
    ordered_json icp = transform_to_json(p.icp->transform);
    icp["rms_residual"] = p.icp->rms_residual;
    icp["iterations"] = p.icp->iterations;
    icp["converged"] = p.icp->converged;
    icp["residual_history"] = p.icp->residual_history;
    j["icp"] = std::move(icp);
  }
  return j;
}

PoseRecord pose_from_json(const json& j) {
  PoseRecord p;
  p.transform = transform_from_json(j);
  p.rms_residual = j.at("rms_residual").get<double>();
  if (j.contains("icp")) {
    const json& i = j.at("icp");
    RegistrationResult r;
    r.transform = transform_from_json(i);
    r.rms_residual = i.at("rms_residual").get<double>();
    r.iterations = i.at("iterations").get<int>();
    r.converged = i.at("converged").get<bool>();
    r.residual_history = i.at("residual_history").get<std::vector<double>>();
    p.icp = std::move(r);
  }
  return p;
}

void write_pose(const fs::path& path, const PoseRecord& p) {
  write_text_file(path, pose_to_json(p).dump(2) + "\n");
}

PoseRecord read_pose(const fs::path& path) { return pose_from_json(read_json_file(path)); }

CorrespondenceSet read_correspondences(const fs::path& path) {
  CorrespondenceSet out;
  for_each_json_line(path, [&](const json& j, long) {
    out.push_back({point_from_json(j.at("source")), point_from_json(j.at("target"))});
  });
  return out;
}

void write_correspondences(const fs::path& path, const CorrespondenceSet& pairs) {
  write_lines(path, pairs, [](const Correspondence& c) {
    ordered_json j;
    j["source"] = point_to_json(c.source);
    j["target"] = point_to_json(c.target);
    return j;
  });
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInput, path.string() + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInput, path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw Error(ErrorCode::kInput, path.string() + ": write failed");
}

}  // namespace msense
