#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "msense/depth_map.hpp"
#include "msense/geometry.hpp"
#include "msense/transform.hpp"

namespace msense {

struct Sphere {
  double radius = 0.25;
};

// Axis-aligned box given relative to the actor position.
struct Box {
  Point3 min = Point3(-0.25, -0.15, -0.85);
  Point3 max = Point3(0.25, 0.15, 0.85);
};

using Shape = std::variant<Sphere, Box>;

// Piecewise-linear position over time, held constant outside the knots.
struct Trajectory {
  std::vector<std::pair<double, Point3>> knots;  // sorted by time

  Point3 at(double t) const;
  static Trajectory fixed(const Point3& p) { return {{{0.0, p}}}; }
};

struct Actor {
  std::string name;
  Shape shape;
  int class_id = 0;
  Trajectory trajectory;
};

struct SimCamera {
  int id = 0;
  CameraIntrinsics intrinsics;
  RigidTransform pose;  // camera-to-world
};

struct Scene {
  std::vector<Actor> actors;
  std::vector<SimCamera> cameras;
  double duration = 0.0;
  double frame_rate = 10.0;

  void validate() const;
  // Frames at t = i / frame_rate for t <= duration.
  long frame_count() const;
  double frame_time(long i) const { return static_cast<double>(i) / frame_rate; }
};

// Stereo disparity error. Matching aggregates over a support window, so the
// disparity error is drawn once per square tile of `tile_px` pixels (1 gives
// independent pixels); every pixel keeps the marginal sigma_z below.
struct NoiseModel {
  double disparity_std = 0.25;  // pixels
  double baseline = 0.12;       // meters
  int tile_px = 16;
  bool enabled = false;

  void validate() const;
};

// Ray parameter s > 0 of the nearest hit along origin + s * dir.
std::optional<double> ray_sphere(const Point3& origin, const Point3& dir,
                                 const Point3& center, double radius);
std::optional<double> ray_box(const Point3& origin, const Point3& dir, const Aabb& box);

// World-frame axis-aligned box of a box actor, or the sphere bounds.
Aabb actor_bounds(const Actor& a, double t);

// Euclidean distance from p to the actor surface (0 on the surface).
double distance_to_surface(const Actor& a, double t, const Point3& p);

// Analytic ray cast: each pixel gets the camera-frame z of the nearest hit, or
// NaN when nothing is hit inside [depth_min, depth_max].
DepthMap render_depth(const Scene& scene, std::size_t camera_index, double t);

// Stereo triangulation error: sigma_z = z^2 * disparity_std / (fx * baseline).
double depth_noise_sigma(double z, double fx, const NoiseModel& n);

// Independent seed for sub-stream `stream` (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Gaussian perturbation of every valid pixel with standard deviation
// depth_noise_sigma(z), shared within a tile; deterministic per seed. Invalid
// pixels are left alone.
DepthMap apply_noise(const DepthMap& depth, const CameraIntrinsics& k, const NoiseModel& n,
                     std::uint64_t seed);

// Exact bounding rectangle of the actor silhouette (unclamped), or nullopt
// when the actor is entirely behind the camera.
std::optional<BBox> silhouette_bbox(const Actor& a, double t, const SimCamera& cam);

// One detection per actor whose silhouette intersects the image, clamped to
// the image, confidence 1.
std::vector<Detection2D> synth_detections(const Scene& scene, std::size_t camera_index,
                                          double t, long frame_index = 0);

}  // namespace msense
