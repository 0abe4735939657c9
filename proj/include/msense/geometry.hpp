#pragma once

#include <optional>
#include <vector>

#include "msense/depth_map.hpp"
#include "msense/transform.hpp"

namespace msense {

// Pinhole intrinsics. Pixel (i, j) of a depth map has continuous coordinate
// u = i, v = j; the camera frame is right-handed with +z along the optical
// axis, +u right and +v down.
struct CameraIntrinsics {
  double fx = 700.0;
  double fy = 700.0;
  double cx = 640.0;
  double cy = 360.0;
  int width = 1280;
  int height = 720;
  double depth_min = 0.2;
  double depth_max = 20.0;

  bool is_valid() const;
  // Throws Error(kDomain) naming the violated invariant.
  void validate() const;
  bool in_depth_range(double z) const { return z >= depth_min && z <= depth_max; }
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

struct Projection {
  Pixel pixel;
  double depth = 0.0;
};

struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  Pixel center() const { return {x + 0.5 * w, y + 0.5 * h}; }
};

struct Detection2D {
  BBox bbox;
  int class_id = 0;
  double confidence = 1.0;
  int camera_id = 0;
  long frame_index = 0;
  double timestamp = 0.0;
};

struct Aabb {
  Point3 min = Point3::Zero();
  Point3 max = Point3::Zero();

  bool contains(const Point3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() &&
           (p.array() <= max.array() + tol).all();
  }
  void expand(const Point3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
};

struct Object3D {
  Point3 centroid = Point3::Zero();
  Aabb aabb;
  int class_id = 0;
  double confidence = 0.0;
  int camera_id = 0;
  double timestamp = 0.0;
};

Point3 backproject_pixel(const Pixel& p, double depth, const CameraIntrinsics& k);

Projection project_point(const Point3& p_cam, const CameraIntrinsics& k);

// Bbox clipped to the image, or nullopt if it misses the image entirely.
std::optional<BBox> clip_to_image(const BBox& b, const CameraIntrinsics& k);

// Valid depth samples inside a bbox. Every pixel is visited for boxes up to
// 64x64 pixels, larger boxes are read on a uniform 64x64 subgrid. Samples
// outside [depth_min, depth_max] are treated as invalid.
std::vector<float> sample_bbox_depths(const BBox& b, const DepthMap& depth,
                                      const CameraIntrinsics& k);

// Lower median (the smaller middle element for even counts), so the result is
// always an observed depth. Requires a non-empty input.
double median_depth(std::vector<float> samples);

Object3D bbox_to_object3d(const Detection2D& d, const DepthMap& depth,
                          const CameraIntrinsics& k, const RigidTransform& pose);

}  // namespace msense
