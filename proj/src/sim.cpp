#include "msense/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "msense/error.hpp"

namespace msense {

namespace {

constexpr double kNearPlane = 1e-6;

Aabb box_bounds(const Box& b, const Point3& pos) { return {pos + b.min, pos + b.max}; }

std::array<Point3, 8> corners(const Aabb& b) {
  std::array<Point3, 8> c;
  for (int i = 0; i < 8; ++i) {
    c[i] = Point3(i & 1 ? b.max.x() : b.min.x(), i & 2 ? b.max.y() : b.min.y(),
                  i & 4 ? b.max.z() : b.min.z());
  }
  return c;
}

std::optional<BBox> sphere_silhouette(const Point3& c, double r, const CameraIntrinsics& k) {
  if (c.z() + r <= 0.0) return std::nullopt;
  if (c.z() <= r) {
    // Sphere straddles the camera plane; the silhouette is unbounded.
    const double big = 1e6;
    return BBox{-big, -big, 2 * big + k.width, 2 * big + k.height};
  }
  const double denom = c.z() * c.z() - r * r;
  auto extent = [&](double lateral, double f, double centre, double& lo, double& hi) {
    double root = r * std::sqrt(lateral * lateral + denom);
    double m0 = (lateral * c.z() - root) / denom;
    double m1 = (lateral * c.z() + root) / denom;
    lo = f * m0 + centre;
    hi = f * m1 + centre;
  };
  double u0, u1, v0, v1;
  extent(c.x(), k.fx, k.cx, u0, u1);
  extent(c.y(), k.fy, k.cy, v0, v1);
  return BBox{u0, v0, u1 - u0, v1 - v0};
}

std::optional<BBox> box_silhouette(const Aabb& world_box, const SimCamera& cam) {
  const RigidTransform to_cam = cam.pose.inverse();
  auto wc = corners(world_box);
  std::array<Point3, 8> cc;
  for (int i = 0; i < 8; ++i) cc[i] = to_cam.apply(wc[i]);

  std::vector<Point3> pts;
  for (const auto& p : cc)
    if (p.z() >= kNearPlane) pts.push_back(p);
  if (pts.size() < 8) {
    // Clip the 12 edges against the near plane.
    for (int i = 0; i < 8; ++i) {
      for (int bit : {1, 2, 4}) {
        int j = i | bit;
        if (j == i) continue;
        const Point3& a = cc[i];
        const Point3& b = cc[j];
        if ((a.z() - kNearPlane) * (b.z() - kNearPlane) < 0.0) {
          double s = (kNearPlane - a.z()) / (b.z() - a.z());
          pts.push_back(a + s * (b - a));
        }
      }
    }
  }
  if (pts.empty()) return std::nullopt;
  const auto& k = cam.intrinsics;
  double u0 = std::numeric_limits<double>::infinity(), v0 = u0;
  double u1 = -u0, v1 = -u0;
  for (const auto& p : pts) {
    double u = k.fx * p.x() / p.z() + k.cx;
    double v = k.fy * p.y() / p.z() + k.cy;
    u0 = std::min(u0, u);
    u1 = std::max(u1, u);
    v0 = std::min(v0, v);
    v1 = std::max(v1, v);
  }
  return BBox{u0, v0, u1 - u0, v1 - v0};
}

}  // namespace

Point3 Trajectory::at(double t) const {
  if (knots.empty()) return Point3::Zero();
  if (t <= knots.front().first) return knots.front().second;
  if (t >= knots.back().first) return knots.back().second;
  auto it = std::upper_bound(knots.begin(), knots.end(), t,
                             [](double v, const auto& k) { return v < k.first; });
  const auto& [t1, p1] = *it;
  const auto& [t0, p0] = *(it - 1);
  double a = (t - t0) / (t1 - t0);
  return p0 + a * (p1 - p0);
}

void Scene::validate() const {
  const auto fail = [](const std::string& why) { throw Error(ErrorCode::kConfig, "scene: " + why); };
  if (!(frame_rate > 0)) fail("frame_rate must be > 0");
  if (!(duration >= 0)) fail("duration must be >= 0");
  for (const auto& a : actors) {
    if (const auto* s = std::get_if<Sphere>(&a.shape)) {
      if (!(s->radius > 0)) fail("actor '" + a.name + "' radius must be > 0");
    } else {
      const auto& b = std::get<Box>(a.shape);
      if (!((b.max.array() > b.min.array()).all())) fail("actor '" + a.name + "' box is degenerate");
    }
    if (a.trajectory.knots.empty()) fail("actor '" + a.name + "' has no trajectory");
    for (std::size_t i = 1; i < a.trajectory.knots.size(); ++i) {
      if (!(a.trajectory.knots[i].first > a.trajectory.knots[i - 1].first)) {
        fail("actor '" + a.name + "' trajectory times must increase");
      }
    }
  }
  for (const auto& c : cameras) {
    c.intrinsics.validate();
    if (!c.pose.is_valid(1e-6)) fail("camera pose is not a rigid transform");
  }
}

long Scene::frame_count() const {
  return static_cast<long>(std::floor(duration * frame_rate + 1e-9)) + 1;
}

void NoiseModel::validate() const {
  if (!(disparity_std >= 0) || !(baseline > 0) || tile_px < 1) {
    throw Error(ErrorCode::kConfig,
                "noise: disparity_std must be >= 0, baseline > 0, tile_px >= 1");
  }
}

std::optional<double> ray_sphere(const Point3& origin, const Point3& dir, const Point3& center,
                                 double radius) {
  Point3 oc = origin - center;
  double a = dir.squaredNorm();
  double b = oc.dot(dir);
  double c = oc.squaredNorm() - radius * radius;
  double disc = b * b - a * c;
  if (disc < 0.0) return std::nullopt;
  double sq = std::sqrt(disc);
  double s0 = (-b - sq) / a;
  if (s0 > 0.0) return s0;
  double s1 = (-b + sq) / a;
  if (s1 > 0.0) return s1;
  return std::nullopt;
}

std::optional<double> ray_box(const Point3& origin, const Point3& dir, const Aabb& box) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (dir[i] == 0.0) {
      if (origin[i] < box.min[i] || origin[i] > box.max[i]) return std::nullopt;
      continue;
    }
    double a = (box.min[i] - origin[i]) / dir[i];
    double b = (box.max[i] - origin[i]) / dir[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 > t1) return std::nullopt;
  if (t0 > 0.0) return t0;
  if (t1 > 0.0) return t1;
  return std::nullopt;
}

Aabb actor_bounds(const Actor& a, double t) {
  Point3 pos = a.trajectory.at(t);
  if (const auto* s = std::get_if<Sphere>(&a.shape)) {
    Point3 r = Point3::Constant(s->radius);
    return {pos - r, pos + r};
  }
  return box_bounds(std::get<Box>(a.shape), pos);
}

double distance_to_surface(const Actor& a, double t, const Point3& p) {
  Point3 pos = a.trajectory.at(t);
  if (const auto* s = std::get_if<Sphere>(&a.shape)) {
    return std::abs((p - pos).norm() - s->radius);
  }
  Aabb b = box_bounds(std::get<Box>(a.shape), pos);
  Point3 outside = (b.min - p).cwiseMax(p - b.max).cwiseMax(Point3::Zero());
  if (outside.squaredNorm() > 0) return outside.norm();
  Point3 inside = (p - b.min).cwiseMin(b.max - p);
  return inside.minCoeff();
}

std::optional<BBox> silhouette_bbox(const Actor& a, double t, const SimCamera& cam) {
  if (const auto* s = std::get_if<Sphere>(&a.shape)) {
    Point3 c = cam.pose.inverse().apply(a.trajectory.at(t));
    return sphere_silhouette(c, s->radius, cam.intrinsics);
  }
  return box_silhouette(actor_bounds(a, t), cam);
}

DepthMap render_depth(const Scene& scene, std::size_t camera_index, double t) {
  const SimCamera& cam = scene.cameras.at(camera_index);
  const CameraIntrinsics& k = cam.intrinsics;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> nearest(static_cast<std::size_t>(k.width) * k.height, inf);
  const Point3 origin = cam.pose.translation;

  for (const auto& actor : scene.actors) {
    auto sil = silhouette_bbox(actor, t, cam);
    if (!sil) continue;
    // Rays are only cast inside the silhouette rectangle, padded by a pixel.
    int i0 = std::max(0, static_cast<int>(std::floor(std::max(sil->x, -2.0))) - 1);
    int j0 = std::max(0, static_cast<int>(std::floor(std::max(sil->y, -2.0))) - 1);
    int i1 = std::min(k.width - 1,
                      static_cast<int>(std::ceil(std::min(sil->x + sil->w, k.width + 2.0))) + 1);
    int j1 = std::min(k.height - 1,
                      static_cast<int>(std::ceil(std::min(sil->y + sil->h, k.height + 2.0))) + 1);
    if (i0 > i1 || j0 > j1) continue;

    const Point3 pos = actor.trajectory.at(t);
    const Sphere* sphere = std::get_if<Sphere>(&actor.shape);
    const Aabb box = actor_bounds(actor, t);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        // Camera-frame ray with unit z, so the ray parameter is the z-depth.
        Point3 d_cam((i - k.cx) / k.fx, (j - k.cy) / k.fy, 1.0);
        Point3 dir = cam.pose.rotation * d_cam;
        auto s = sphere ? ray_sphere(origin, dir, pos, sphere->radius) : ray_box(origin, dir, box);
        if (!s) continue;
        double& slot = nearest[static_cast<std::size_t>(j) * k.width + i];
        slot = std::min(slot, *s);
      }
    }
  }

  DepthMap out(k.width, k.height);
  for (std::size_t n = 0; n < nearest.size(); ++n) {
    double z = nearest[n];
    if (z != inf && k.in_depth_range(z)) out.values[n] = static_cast<float>(z);
  }
  return out;
}

double depth_noise_sigma(double z, double fx, const NoiseModel& n) {
  return z * z * n.disparity_std / (fx * n.baseline);
}

DepthMap apply_noise(const DepthMap& depth, const CameraIntrinsics& k, const NoiseModel& n,
                     std::uint64_t seed) {
  DepthMap out = depth;
  if (!n.enabled || n.disparity_std == 0.0) return out;
  n.validate();
  const int tiles_u = (depth.width + n.tile_px - 1) / n.tile_px;
  const int tiles_v = (depth.height + n.tile_px - 1) / n.tile_px;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> tile(static_cast<std::size_t>(tiles_u) * tiles_v);
  for (auto& t : tile) t = unit(rng);
  for (int j = 0; j < depth.height; ++j) {
    const std::size_t row = static_cast<std::size_t>(j / n.tile_px) * tiles_u;
    for (int i = 0; i < depth.width; ++i) {
      float& z = out.at(i, j);
      if (!DepthMap::is_valid(z)) continue;
      z = static_cast<float>(z + depth_noise_sigma(z, k.fx, n) * tile[row + i / n.tile_px]);
    }
  }
  return out;
}

std::vector<Detection2D> synth_detections(const Scene& scene, std::size_t camera_index,
                                          double t, long frame_index) {
  const SimCamera& cam = scene.cameras.at(camera_index);
  std::vector<Detection2D> out;
  for (const auto& actor : scene.actors) {
    auto sil = silhouette_bbox(actor, t, cam);
    if (!sil) continue;
    auto clipped = clip_to_image(*sil, cam.intrinsics);
    if (!clipped) continue;
    Detection2D d;
    d.bbox = *clipped;
    d.class_id = actor.class_id;
    d.confidence = 1.0;
    d.camera_id = cam.id;
    d.frame_index = frame_index;
    d.timestamp = t;
    out.push_back(d);
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace msense
