#include "msense/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "msense/error.hpp"

namespace msense {

namespace {

constexpr int kMaxSamplesPerAxis = 64;

bool finite(const Point3& p) { return p.allFinite(); }

}  // namespace

bool RigidTransform::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  Matrix3 gram = rotation.transpose() * rotation;
  if ((gram - Matrix3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

double rotation_angle_between(const Matrix3& a, const Matrix3& b) {
  Matrix3 rel = a.transpose() * b;
  double c = std::clamp((rel.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

RigidTransform look_at(const Point3& eye, const Point3& target, const Point3& up) {
  Point3 z = (target - eye).normalized();
  Point3 x = z.cross(up);
  if (x.norm() < 1e-12) {
    // Looking along up; any perpendicular works.
    x = z.unitOrthogonal();
  }
  x.normalize();
  Point3 y = z.cross(x);
  RigidTransform t;
  t.rotation.col(0) = x;
  t.rotation.col(1) = y;
  t.rotation.col(2) = z;
  t.translation = eye;
  return t;
}

bool CameraIntrinsics::is_valid() const {
  return std::isfinite(fx) && std::isfinite(fy) && fx > 0 && fy > 0 &&
         width > 0 && height > 0 && cx >= 0 && cx < width && cy >= 0 &&
         cy < height && depth_min > 0 && depth_min < depth_max &&
         std::isfinite(depth_max);
}

void CameraIntrinsics::validate() const {
  if (is_valid()) return;
  std::ostringstream os;
  os << "invalid intrinsics: fx=" << fx << " fy=" << fy << " cx=" << cx
     << " cy=" << cy << " size=" << width << "x" << height
     << " depth=[" << depth_min << ", " << depth_max << "]";
  throw Error(ErrorCode::kDomain, os.str());
}

Point3 backproject_pixel(const Pixel& p, double depth, const CameraIntrinsics& k) {
  if (!std::isfinite(p.u) || !std::isfinite(p.v) || !std::isfinite(depth)) {
    throw Error(ErrorCode::kDomain, "backproject_pixel: non-finite input");
  }
  if (!k.in_depth_range(depth)) {
    std::ostringstream os;
    os << "depth " << depth << " m outside [" << k.depth_min << ", "
       << k.depth_max << "]";
    throw Error(ErrorCode::kInvalidDepth, os.str());
  }
  return {(p.u - k.cx) * depth / k.fx, (p.v - k.cy) * depth / k.fy, depth};
}

Projection project_point(const Point3& p, const CameraIntrinsics& k) {
  if (!finite(p)) throw Error(ErrorCode::kDomain, "project_point: non-finite point");
  if (p.z() <= 0.0) {
    throw Error(ErrorCode::kBehindCamera, "project_point: point behind camera");
  }
  return {{k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy}, p.z()};
}

std::optional<BBox> clip_to_image(const BBox& b, const CameraIntrinsics& k) {
  double x0 = std::max(b.x, 0.0);
  double y0 = std::max(b.y, 0.0);
  double x1 = std::min(b.x + b.w, static_cast<double>(k.width));
  double y1 = std::min(b.y + b.h, static_cast<double>(k.height));
  if (!(x1 > x0) || !(y1 > y0)) return std::nullopt;
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

std::vector<float> sample_bbox_depths(const BBox& b, const DepthMap& depth,
                                      const CameraIntrinsics& k) {
  std::vector<float> out;
  // Integer pixels whose coordinate lies in [x, x + w) x [y, y + h).
  int i0 = std::max(0, static_cast<int>(std::ceil(b.x)));
  int j0 = std::max(0, static_cast<int>(std::ceil(b.y)));
  int i1 = std::min(depth.width, static_cast<int>(std::ceil(b.x + b.w)));
  int j1 = std::min(depth.height, static_cast<int>(std::ceil(b.y + b.h)));
  int nu = i1 - i0;
  int nv = j1 - j0;
  if (nu <= 0 || nv <= 0) return out;

  auto take = [&](int i, int j) {
    float z = depth.at(i, j);
    if (DepthMap::is_valid(z) && k.in_depth_range(z)) out.push_back(z);
  };

  if (nu <= kMaxSamplesPerAxis && nv <= kMaxSamplesPerAxis) {
    out.reserve(static_cast<std::size_t>(nu) * nv);
    for (int j = j0; j < j1; ++j)
      for (int i = i0; i < i1; ++i) take(i, j);
    return out;
  }
  int su = std::min(nu, kMaxSamplesPerAxis);
  int sv = std::min(nv, kMaxSamplesPerAxis);
  out.reserve(static_cast<std::size_t>(su) * sv);
  for (int b_j = 0; b_j < sv; ++b_j) {
    int j = j0 + static_cast<int>((b_j + 0.5) * nv / sv);
    for (int b_i = 0; b_i < su; ++b_i) {
      int i = i0 + static_cast<int>((b_i + 0.5) * nu / su);
      take(i, j);
    }
  }
  return out;
}

double median_depth(std::vector<float> samples) {
  if (samples.empty()) throw Error(ErrorCode::kNoDepth, "median of empty sample set");
  auto mid = samples.begin() + static_cast<std::ptrdiff_t>((samples.size() - 1) / 2);
  std::nth_element(samples.begin(), mid, samples.end());
  return *mid;
}

Object3D bbox_to_object3d(const Detection2D& d, const DepthMap& depth,
                          const CameraIntrinsics& k, const RigidTransform& pose) {
  if (depth.width != k.width || depth.height != k.height) {
    throw Error(ErrorCode::kDomain, "depth map size does not match intrinsics");
  }
  if (!(d.bbox.w > 0) || !(d.bbox.h > 0)) {
    throw Error(ErrorCode::kDomain, "bbox must have positive size");
  }
  auto clipped = clip_to_image(d.bbox, k);
  if (!clipped) throw Error(ErrorCode::kDomain, "bbox does not intersect image");

  auto samples = sample_bbox_depths(*clipped, depth, k);
  if (samples.empty()) {
    throw Error(ErrorCode::kNoDepth, "no valid depth inside bbox");
  }
  double z = median_depth(std::move(samples));

  Object3D obj;
  obj.centroid = pose.apply(backproject_pixel(clipped->center(), z, k));
  const BBox& b = *clipped;
  const Pixel corners[4] = {{b.x, b.y}, {b.x + b.w, b.y}, {b.x, b.y + b.h},
                            {b.x + b.w, b.y + b.h}};
  obj.aabb.min = obj.aabb.max = obj.centroid;
  for (const auto& c : corners) obj.aabb.expand(pose.apply(backproject_pixel(c, z, k)));
  obj.class_id = d.class_id;
  obj.confidence = d.confidence;
  obj.camera_id = d.camera_id;
  obj.timestamp = d.timestamp;
  return obj;
}

}  // namespace msense
