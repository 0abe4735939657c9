#include "msense/accuracy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "msense/error.hpp"

namespace msense {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDegToRad = M_PI / 180.0;

Actor subject_actor(const AccuracyConfig& cfg, std::string name, const Point3& pos) {
  Actor a;
  a.name = std::move(name);
  a.shape = cfg.subject;
  a.class_id = cfg.subject_class;
  a.trajectory = Trajectory::fixed(pos);
  return a;
}

std::optional<Point3> measure(const Actor& actor, const SimCamera& cam, const DepthMap& depth) {
  auto sil = silhouette_bbox(actor, 0.0, cam);
  if (!sil) return std::nullopt;
  auto clipped = clip_to_image(*sil, cam.intrinsics);
  if (!clipped) return std::nullopt;
  Detection2D d;
  d.bbox = *clipped;
  d.class_id = actor.class_id;
  try {
    return bbox_to_object3d(d, depth, cam.intrinsics, cam.pose).centroid;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNoDepth) return std::nullopt;
    throw;
  }
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

Rgb heat_color(double e) {
  if (std::isnan(e)) return {128, 128, 128};
  double t = std::clamp((e - kGreenMaxError) / (kRedMinError - kGreenMaxError), 0.0, 1.0);
  return {static_cast<std::uint8_t>(std::lround(255.0 * t)),
          static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t))), 0};
}

std::string color_label(double e) {
  if (std::isnan(e)) return "missing";
  Rgb c = heat_color(e);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

bool HeatmapCell::missing() const { return std::isnan(measured_distance); }

SimCamera experiment_camera(const AccuracyConfig& cfg, double pitch_deg) {
  SimCamera cam;
  cam.id = 0;
  cam.intrinsics = cfg.intrinsics;
  const Point3 eye(0.0, 0.0, cfg.camera_height);
  const double p = pitch_deg * kDegToRad;
  cam.pose = look_at(eye, eye + Point3(0.0, std::cos(p), -std::sin(p)));
  return cam;
}

std::vector<Station> fan_stations(const AccuracyConfig& base, std::span<const double> bearings_deg,
                                  std::span<const double> ranges, double margin_px) {
  std::vector<Station> out;
  const SimCamera cam = experiment_camera(base, 0.0);
  const auto& k = base.intrinsics;
  const auto center_sil =
      silhouette_bbox(subject_actor(base, "center", base.center_subject), 0.0, cam);
  for (double bearing : bearings_deg) {
    for (double range : ranges) {
      const double th = bearing * kDegToRad;
      const Point3 pos(range * std::sin(th), range * std::cos(th), base.center_subject.z());
      auto sil = silhouette_bbox(subject_actor(base, "s", pos), 0.0, cam);
      if (!sil || sil->x < margin_px || sil->y < margin_px ||
          sil->x + sil->w > k.width - margin_px || sil->y + sil->h > k.height - margin_px) {
        continue;
      }
      if (center_sil && sil->x < center_sil->x + center_sil->w + margin_px &&
          center_sil->x < sil->x + sil->w + margin_px) {
        continue;
      }
      const double near_face = cam.pose.inverse().apply(pos).z() + base.subject.min.y();
      if (!k.in_depth_range(near_face)) continue;
      char label[32];
      std::snprintf(label, sizeof label, "%+.0fdeg-%.1fm", bearing, range);
      out.push_back({label, pos});
    }
  }
  return out;
}

AccuracyConfig default_accuracy_config() {
  AccuracyConfig cfg;
  const double bearings[] = {-24.0, -12.0, 12.0, 24.0};
  const double ranges[] = {3.5, 5.0, 6.5, 8.0, 9.5, 11.0, 12.5};
  cfg.stations = fan_stations(cfg, bearings, ranges);
  NoiseModel off;
  off.enabled = false;
  NoiseModel on;
  on.enabled = true;
  cfg.conditions = {{"noise_off", off, 0.0, 1}, {"stereo_noise", on, 0.0, 2},
                    {"stereo_noise_pitch5", on, 5.0, 3}};
  return cfg;
}

HeatmapReport run_accuracy_condition(const AccuracyConfig& cfg, const AccuracyCondition& cond) {
  cfg.intrinsics.validate();
  if (cond.noise.enabled) cond.noise.validate();
  HeatmapReport report;
  report.name = cond.name;

  Scene scene;
  scene.cameras.push_back(experiment_camera(cfg, cond.pitch_deg));
  const SimCamera& cam = scene.cameras.front();
  const Actor center = subject_actor(cfg, "center", cfg.center_subject);

  for (std::size_t si = 0; si < cfg.stations.size(); ++si) {
    const Station& st = cfg.stations[si];
    const Actor mover = subject_actor(cfg, st.label, st.position);
    scene.actors = {center, mover};

    DepthMap depth = render_depth(scene, 0, 0.0);
    if (cond.noise.enabled) {
      depth = apply_noise(depth, cam.intrinsics, cond.noise, derive_seed(cond.seed, si));
    }

    HeatmapCell cell;
    cell.label = st.label;
    cell.position = st.position;
    cell.camera_distance = (st.position - cam.pose.translation).norm();
    cell.true_distance = (st.position - cfg.center_subject).norm();
    auto a = measure(center, cam, depth);
    auto b = measure(mover, cam, depth);
    if (a && b) {
      cell.measured_distance = (*a - *b).norm();
      cell.abs_error = std::abs(cell.measured_distance - cell.true_distance);
    } else {
      cell.measured_distance = kNaN;
      cell.abs_error = kNaN;
    }
    report.cells.push_back(std::move(cell));
  }
  return report;
}

HeatmapReport average_reports(std::span<const HeatmapReport> reports, std::string name) {
  HeatmapReport avg;
  avg.name = std::move(name);
  if (reports.empty()) return avg;
  avg.cells = reports.front().cells;
  for (std::size_t i = 0; i < avg.cells.size(); ++i) {
    double measured = 0.0, err = 0.0;
    int n = 0;
    for (const auto& r : reports) {
      const auto& c = r.cells.at(i);
      if (c.missing()) continue;
      measured += c.measured_distance;
      err += c.abs_error;
      ++n;
    }
    avg.cells[i].measured_distance = n ? measured / n : kNaN;
    avg.cells[i].abs_error = n ? err / n : kNaN;
  }
  return avg;
}

AccuracyResult run_accuracy_experiment(const AccuracyConfig& cfg) {
  AccuracyResult out;
  for (const auto& cond : cfg.conditions) out.conditions.push_back(run_accuracy_condition(cfg, cond));
  out.average = average_reports(out.conditions);
  return out;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::kDomain, "spearman needs two equal-length samples of size >= 2");
  }
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  auto ra = ranks(a);
  auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

void write_heatmap_csv(std::ostream& os, const HeatmapReport& r) {
  os << "station,true_d,measured_d,abs_error,color\n";
  for (const auto& c : r.cells) {
    os << c.label << ',' << fmt(c.true_distance) << ',' << fmt(c.measured_distance) << ','
       << fmt(c.abs_error) << ',' << color_label(c.abs_error) << '\n';
  }
}

HeatmapReport read_heatmap_csv(std::istream& is) {
  HeatmapReport r;
  std::string line;
  if (!std::getline(is, line) || line != "station,true_d,measured_d,abs_error,color") {
    throw Error(ErrorCode::kInput, "heatmap CSV: bad header");
  }
  auto num = [](const std::string& s) { return s.empty() ? kNaN : std::stod(s); };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 5) throw Error(ErrorCode::kInput, "heatmap CSV: expected 5 fields: " + line);
    HeatmapCell c;
    c.label = f[0];
    c.true_distance = num(f[1]);
    c.measured_distance = num(f[2]);
    c.abs_error = num(f[3]);
    r.cells.push_back(std::move(c));
  }
  return r;
}

void write_heatmap_ppm(std::ostream& os, const HeatmapReport& r, const AccuracyConfig& cfg,
                       int size_px) {
  // Floor-plan view: x to the right, y (away from the camera) upwards.
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = cfg.center_subject.y();
  auto grow = [&](const Point3& p) {
    x0 = std::min(x0, p.x());
    x1 = std::max(x1, p.x());
    y0 = std::min(y0, p.y());
    y1 = std::max(y1, p.y());
  };
  grow(cfg.center_subject);
  for (const auto& c : r.cells) grow(c.position);
  const double margin = 1.0;
  x0 -= margin;
  x1 += margin;
  y0 -= margin;
  y1 += margin;
  const double scale = (size_px - 1) / std::max(x1 - x0, y1 - y0);

  std::vector<Rgb> img(static_cast<std::size_t>(size_px) * size_px, Rgb{32, 32, 32});
  auto square = [&](const Point3& p, int half, Rgb color) {
    int cx = static_cast<int>(std::lround((p.x() - x0) * scale));
    int cy = size_px - 1 - static_cast<int>(std::lround((p.y() - y0) * scale));
    for (int y = std::max(0, cy - half); y <= std::min(size_px - 1, cy + half); ++y)
      for (int x = std::max(0, cx - half); x <= std::min(size_px - 1, cx + half); ++x)
        img[static_cast<std::size_t>(y) * size_px + x] = color;
  };
  square(Point3::Zero(), 6, Rgb{64, 128, 255});
  square(cfg.center_subject, 8, Rgb{255, 255, 255});
  for (const auto& c : r.cells) square(c.position, 10, heat_color(c.abs_error));

  os << "P6\n" << size_px << ' ' << size_px << "\n255\n";
  for (const auto& px : img) {
    os.put(static_cast<char>(px.r));
    os.put(static_cast<char>(px.g));
    os.put(static_cast<char>(px.b));
  }
}

}  // namespace msense
