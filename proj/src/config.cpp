#include "msense/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>

#include "msense/error.hpp"
#include "msense/io.hpp"

namespace msense {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& why) {
  throw Error(ErrorCode::kConfig, where + ": " + why);
}

std::string child(const std::string& where, const std::string& key) {
  return where == "<root>" ? key : where + "." + key;
}

std::string child(const std::string& where, std::size_t i) {
  return where + "[" + std::to_string(i) + "]";
}

// Object with a fixed key set; typed accessors name the key path on error.
class Obj {
 public:
  Obj(const json& j, std::string where, std::initializer_list<const char*> allowed)
      : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(where_, "expected an object");
    for (const auto& [key, _] : j_.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
        throw Error(ErrorCode::kConfig, "unknown key '" + key + "' at " + where_);
      }
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const {
    if (!j_.contains(key)) fail(where_, std::string("missing required key '") + key + "'");
    return j_.at(key);
  }
  std::string path(const char* key) const { return child(where_, key); }

  double num(const char* key) const { return as_num(at(key), path(key)); }
  double num(const char* key, double def) const { return has(key) ? num(key) : def; }
  int integer(const char* key) const { return as_int(at(key), path(key)); }
  int integer(const char* key, int def) const { return has(key) ? integer(key) : def; }
  bool boolean(const char* key, bool def) const {
    if (!has(key)) return def;
    if (!at(key).is_boolean()) fail(path(key), "expected true or false");
    return at(key).get<bool>();
  }
  std::string str(const char* key) const {
    if (!at(key).is_string()) fail(path(key), "expected a string");
    return at(key).get<std::string>();
  }
  std::string str(const char* key, const std::string& def) const {
    return has(key) ? str(key) : def;
  }
  const json& array(const char* key) const {
    if (!at(key).is_array()) fail(path(key), "expected an array");
    return at(key);
  }

  static double as_num(const json& v, const std::string& where) {
    if (!v.is_number()) fail(where, "expected a number");
    return v.get<double>();
  }
  static int as_int(const json& v, const std::string& where) {
    if (!v.is_number_integer()) fail(where, "expected an integer");
    return v.get<int>();
  }
  static Point3 as_point(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3) fail(where, "expected [x, y, z]");
    return {as_num(v[0], where), as_num(v[1], where), as_num(v[2], where)};
  }
  Point3 point(const char* key) const { return as_point(at(key), path(key)); }

 private:
  const json& j_;
  std::string where_;
};

template <typename Fn>
void rethrow_as_config(const std::string& where, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    fail(where, e.what());
  }
}

RigidTransform parse_pose(const json& j, const std::string& where) {
  Obj o(j, where, {"rotation", "translation", "eye", "target", "up"});
  if (o.has("eye")) {
    if (o.has("rotation") || o.has("translation")) {
      fail(where, "give either eye/target or rotation/translation");
    }
    Point3 up = o.has("up") ? o.point("up") : Point3::UnitZ();
    RigidTransform t;
    rethrow_as_config(where, [&] { t = look_at(o.point("eye"), o.point("target"), up); });
    return t;
  }
  if (o.has("target") || o.has("up")) fail(where, "target/up need eye");
  RigidTransform t;
  if (o.has("rotation")) {
    const json& r = o.array("rotation");
    if (r.size() != 9) fail(o.path("rotation"), "expected 9 numbers (row-major)");
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) t.rotation(i, k) = Obj::as_num(r[3 * i + k], o.path("rotation"));
  }
  if (o.has("translation")) t.translation = o.point("translation");
  if (!t.is_valid(1e-6)) fail(where, "rotation is not a proper rotation matrix");
  return t;
}

CameraConfig parse_camera(const json& j, const std::string& where) {
  Obj o(j, where, {"id", "intrinsics", "pose"});
  CameraConfig c;
  c.id = o.integer("id");
  if (o.has("intrinsics")) c.intrinsics = parse_intrinsics(o.at("intrinsics"), o.path("intrinsics"));
  if (o.has("pose")) c.pose = parse_pose(o.at("pose"), o.path("pose"));
  return c;
}

std::vector<CameraConfig> parse_cameras(const Obj& o) {
  std::vector<CameraConfig> out;
  const json& arr = o.array("cameras");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(parse_camera(arr[i], child(o.path("cameras"), i)));
  }
  return out;
}

TrackerParams parse_tracker(const json& j, const std::string& where) {
  Obj o(j, where,
        {"gate_distance", "confirm_hits", "max_misses", "process_noise_accel", "measurement_noise",
         "init_velocity_std"});
  TrackerParams p;
  p.gate_distance = o.num("gate_distance", p.gate_distance);
  p.confirm_hits = o.integer("confirm_hits", p.confirm_hits);
  p.max_misses = o.integer("max_misses", p.max_misses);
  p.process_noise_accel = o.num("process_noise_accel", p.process_noise_accel);
  p.measurement_noise = o.num("measurement_noise", p.measurement_noise);
  p.init_velocity_std = o.num("init_velocity_std", p.init_velocity_std);
  rethrow_as_config(where, [&] { p.validate(); });
  return p;
}

Zone parse_zone(const json& j, const std::string& where) {
  Obj o(j, where, {"id", "footprint", "z_min", "z_max", "on_exit_alarm"});
  Zone z;
  z.id = o.str("id");
  const json& fp = o.array("footprint");
  for (std::size_t i = 0; i < fp.size(); ++i) {
    const std::string w = child(o.path("footprint"), i);
    if (!fp[i].is_array() || fp[i].size() != 2) fail(w, "expected [x, y]");
    z.footprint.emplace_back(Obj::as_num(fp[i][0], w), Obj::as_num(fp[i][1], w));
  }
  z.z_min = o.num("z_min", z.z_min);
  z.z_max = o.num("z_max", z.z_max);
  z.on_exit_alarm = o.boolean("on_exit_alarm", z.on_exit_alarm);
  z.validate();
  return z;
}

Rule parse_rule(const json& j, const std::string& where) {
  Obj o(j, where,
        {"id", "kind", "subject_class", "anchor", "threshold", "hysteresis", "window_k", "min_step",
         "d_min", "d_max", "invert", "level_step", "zone_id"});
  Rule r;
  r.id = o.str("id");
  const std::string kind = o.str("kind");
  auto k = rule_kind_from_string(kind);
  if (!k) fail(o.path("kind"), "unknown rule kind '" + kind + "'");
  r.kind = *k;
  r.subject_class = o.integer("subject_class", r.subject_class);
  if (o.has("anchor")) {
    Obj a(o.at("anchor"), o.path("anchor"), {"point", "class_id"});
    if (a.has("point")) r.anchor.point = a.point("point");
    if (a.has("class_id")) r.anchor.class_id = a.integer("class_id");
  }
  r.threshold = o.num("threshold", r.threshold);
  r.hysteresis = o.num("hysteresis", r.hysteresis);
  r.window_k = o.integer("window_k", r.window_k);
  r.min_step = o.num("min_step", r.min_step);
  r.d_min = o.num("d_min", r.d_min);
  r.d_max = o.num("d_max", r.d_max);
  r.invert = o.boolean("invert", r.invert);
  r.level_step = o.num("level_step", r.level_step);
  r.zone_id = o.str("zone_id", r.zone_id);
  r.validate();
  return r;
}

SinkSpec parse_sink(const json& j, const std::string& where) {
  Obj o(j, where, {"kind", "target"});
  SinkSpec s;
  const std::string kind = o.str("kind");
  if (kind == "stdout") {
    s.kind = SinkKind::kStdout;
  } else if (kind == "file") {
    s.kind = SinkKind::kFile;
  } else if (kind == "command") {
    s.kind = SinkKind::kCommand;
  } else {
    fail(o.path("kind"), "unknown sink kind '" + kind + "' (stdout, file, command)");
  }
  s.target = o.str("target", "");
  if (s.kind != SinkKind::kStdout && s.target.empty()) fail(where, "sink needs a target");
  return s;
}

Trajectory parse_trajectory(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty list of [t, x, y, z]");
  Trajectory tr;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = child(where, i);
    if (!j[i].is_array() || j[i].size() != 4) fail(w, "expected [t, x, y, z]");
    tr.knots.emplace_back(Obj::as_num(j[i][0], w),
                          Point3(Obj::as_num(j[i][1], w), Obj::as_num(j[i][2], w),
                                 Obj::as_num(j[i][3], w)));
  }
  return tr;
}

Shape parse_shape(const json& j, const std::string& where) {
  Obj o(j, where, {"type", "radius", "min", "max"});
  const std::string type = o.str("type");
  if (type == "sphere") {
    if (o.has("min") || o.has("max")) fail(where, "sphere takes only a radius");
    return Sphere{o.num("radius", Sphere{}.radius)};
  }
  if (type == "box") {
    if (o.has("radius")) fail(where, "box takes min/max, not a radius");
    Box b;
    if (o.has("min")) b.min = o.point("min");
    if (o.has("max")) b.max = o.point("max");
    return b;
  }
  fail(o.path("type"), "unknown shape '" + type + "' (sphere, box)");
}

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, path.string() + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
}

template <typename T, typename Fn>
T with_file_context(const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn(parse_file(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kConfig) throw;
    const std::string what = e.what();
    if (what.rfind(path.string(), 0) == 0) throw;
    throw Error(ErrorCode::kConfig, path.string() + ": " + what);
  }
}

}  // namespace

CameraIntrinsics parse_intrinsics(const json& j, const std::string& where) {
  Obj o(j, where, {"fx", "fy", "cx", "cy", "width", "height", "depth_min", "depth_max"});
  CameraIntrinsics k;
  k.fx = o.num("fx", k.fx);
  k.fy = o.num("fy", k.fy);
  k.cx = o.num("cx", k.cx);
  k.cy = o.num("cy", k.cy);
  k.width = o.integer("width", k.width);
  k.height = o.integer("height", k.height);
  k.depth_min = o.num("depth_min", k.depth_min);
  k.depth_max = o.num("depth_max", k.depth_max);
  rethrow_as_config(where, [&] { k.validate(); });
  return k;
}

NoiseModel parse_noise(const json& j, const std::string& where) {
  Obj o(j, where, {"enabled", "disparity_std", "baseline", "tile_px"});
  NoiseModel n;
  n.enabled = o.boolean("enabled", true);
  n.disparity_std = o.num("disparity_std", n.disparity_std);
  n.baseline = o.num("baseline", n.baseline);
  n.tile_px = o.integer("tile_px", n.tile_px);
  rethrow_as_config(where, [&] { n.validate(); });
  return n;
}

PipelineConfig parse_pipeline_config(const json& j, const std::filesystem::path& base_dir) {
  const std::string root = "<root>";
  Obj o(j, root,
        {"cameras", "sync_window_s", "fusion", "tracker", "zones", "rules", "sinks",
         "zone_debounce_frames", "mode", "sim"});
  PipelineConfig c;
  c.cameras = parse_cameras(o);
  c.sync_window = o.num("sync_window_s", c.sync_window);
  if (o.has("fusion")) {
    Obj f(o.at("fusion"), o.path("fusion"), {"voxel_size", "merge_radius", "cloud_stride"});
    c.fusion.voxel_size = f.num("voxel_size", c.fusion.voxel_size);
    c.fusion.merge_radius = f.num("merge_radius", c.fusion.merge_radius);
    c.fusion.cloud_stride = f.integer("cloud_stride", c.fusion.cloud_stride);
  }
  if (o.has("tracker")) c.tracker = parse_tracker(o.at("tracker"), o.path("tracker"));
  if (o.has("zones")) {
    const json& zs = o.array("zones");
    for (std::size_t i = 0; i < zs.size(); ++i) c.zones.push_back(parse_zone(zs[i], child("zones", i)));
  }
  if (o.has("rules")) {
    const json& rs = o.array("rules");
    for (std::size_t i = 0; i < rs.size(); ++i) c.rules.push_back(parse_rule(rs[i], child("rules", i)));
  }
  if (o.has("sinks")) {
    const json& ss = o.array("sinks");
    for (std::size_t i = 0; i < ss.size(); ++i) c.sinks.push_back(parse_sink(ss[i], child("sinks", i)));
  }
  c.zone_debounce_frames = o.integer("zone_debounce_frames", c.zone_debounce_frames);
  const std::string mode = o.str("mode", "replay");
  if (mode == "replay") {
    c.mode = InputMode::kReplay;
  } else if (mode == "simulate") {
    c.mode = InputMode::kSimulate;
  } else {
    fail("mode", "expected 'replay' or 'simulate'");
  }
  if (o.has("sim")) {
    Obj s(o.at("sim"), "sim", {"scene", "seed", "noise"});
    if (s.has("scene")) {
      std::filesystem::path p = s.str("scene");
      c.sim.scene_path = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
    }
    if (s.has("seed")) {
      if (!s.at("seed").is_number_unsigned()) fail("sim.seed", "expected a non-negative integer");
      c.sim.seed = s.at("seed").get<std::uint64_t>();
    }
    if (s.has("noise")) c.sim.noise = parse_noise(s.at("noise"), "sim.noise");
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return with_file_context<PipelineConfig>(
      path, [&](const json& j) { return parse_pipeline_config(j, path.parent_path()); });
}

SceneFile parse_scene(const json& j) {
  Obj o(j, "<root>", {"duration", "frame_rate", "cameras", "actors", "noise"});
  SceneFile f;
  f.scene.duration = o.num("duration");
  f.scene.frame_rate = o.num("frame_rate", f.scene.frame_rate);
  if (o.has("cameras")) {
    for (const auto& c : parse_cameras(o)) f.scene.cameras.push_back({c.id, c.intrinsics, c.pose});
  }
  if (o.has("actors")) {
    const json& arr = o.array("actors");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = child("actors", i);
      Obj a(arr[i], w, {"name", "class_id", "shape", "trajectory"});
      Actor actor;
      actor.name = a.str("name", "actor" + std::to_string(i));
      actor.class_id = a.integer("class_id", 0);
      if (a.has("shape")) actor.shape = parse_shape(a.at("shape"), a.path("shape"));
      actor.trajectory = parse_trajectory(a.at("trajectory"), a.path("trajectory"));
      f.scene.actors.push_back(std::move(actor));
    }
  }
  if (o.has("noise")) f.noise = parse_noise(o.at("noise"), "noise");
  f.scene.validate();
  return f;
}

SceneFile load_scene(const std::filesystem::path& path) {
  return with_file_context<SceneFile>(path, [](const json& j) { return parse_scene(j); });
}

AccuracyConfig parse_accuracy_config(const json& j) {
  Obj o(j, "<root>",
        {"intrinsics", "camera_height", "subject", "subject_class", "center_subject", "stations",
         "fan", "conditions"});
  AccuracyConfig def = default_accuracy_config();
  AccuracyConfig c;
  c.intrinsics = o.has("intrinsics") ? parse_intrinsics(o.at("intrinsics")) : def.intrinsics;
  c.camera_height = o.num("camera_height", def.camera_height);
  c.subject = def.subject;
  if (o.has("subject")) {
    Obj s(o.at("subject"), "subject", {"min", "max"});
    c.subject.min = s.point("min");
    c.subject.max = s.point("max");
    if (!(c.subject.max.array() > c.subject.min.array()).all()) fail("subject", "degenerate box");
  }
  c.subject_class = o.integer("subject_class", def.subject_class);
  c.center_subject = o.has("center_subject") ? o.point("center_subject") : def.center_subject;
  if (o.has("stations") && o.has("fan")) fail("<root>", "give either stations or fan");
  if (o.has("stations")) {
    const json& arr = o.array("stations");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Obj s(arr[i], child("stations", i), {"label", "position"});
      c.stations.push_back({s.str("label"), s.point("position")});
    }
  } else if (o.has("fan")) {
    Obj f(o.at("fan"), "fan", {"bearings_deg", "ranges", "margin_px"});
    std::vector<double> bearings, ranges;
    for (const auto& v : f.array("bearings_deg")) bearings.push_back(Obj::as_num(v, "fan.bearings_deg"));
    for (const auto& v : f.array("ranges")) ranges.push_back(Obj::as_num(v, "fan.ranges"));
    c.stations = fan_stations(c, bearings, ranges, f.num("margin_px", 8.0));
  } else {
    AccuracyConfig tmp = c;
    const double bearings[] = {-24.0, -12.0, 12.0, 24.0};
    const double ranges[] = {3.5, 5.0, 6.5, 8.0, 9.5, 11.0, 12.5};
    c.stations = fan_stations(tmp, bearings, ranges);
  }
  if (c.stations.empty()) fail("stations", "no usable station");
  if (o.has("conditions")) {
    const json& arr = o.array("conditions");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = child("conditions", i);
      Obj s(arr[i], w, {"name", "noise", "pitch_deg", "seed"});
      AccuracyCondition cond;
      cond.name = s.str("name");
      if (s.has("noise")) {
        cond.noise = parse_noise(s.at("noise"), s.path("noise"));
      } else {
        cond.noise.enabled = false;
      }
      cond.pitch_deg = s.num("pitch_deg", 0.0);
      if (s.has("seed")) {
        if (!s.at("seed").is_number_unsigned()) fail(s.path("seed"), "expected a non-negative integer");
        cond.seed = s.at("seed").get<std::uint64_t>();
      }
      c.conditions.push_back(std::move(cond));
    }
  } else {
    c.conditions = def.conditions;
  }
  if (c.conditions.empty()) fail("conditions", "at least one condition is needed");
  return c;
}

AccuracyConfig load_accuracy_config(const std::filesystem::path& path) {
  return with_file_context<AccuracyConfig>(path,
                                           [](const json& j) { return parse_accuracy_config(j); });
}

ordered_json intrinsics_to_json(const CameraIntrinsics& k) {
  ordered_json j;
  j["fx"] = k.fx;
  j["fy"] = k.fy;
  j["cx"] = k.cx;
  j["cy"] = k.cy;
  j["width"] = k.width;
  j["height"] = k.height;
  j["depth_min"] = k.depth_min;
  j["depth_max"] = k.depth_max;
  return j;
}

ordered_json camera_to_json(const CameraConfig& c) {
  ordered_json j;
  j["id"] = c.id;
  j["intrinsics"] = intrinsics_to_json(c.intrinsics);
  j["pose"] = transform_to_json(c.pose);
  return j;
}

}  // namespace msense
