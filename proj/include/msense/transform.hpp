#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace msense {

using Point3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

// Proper rigid motion p -> R p + t. Used for camera-to-world poses.
struct RigidTransform {
  Matrix3 rotation = Matrix3::Identity();
  Point3 translation = Point3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Point3& t) {
    return {Matrix3::Identity(), t};
  }
  static RigidTransform from_axis_angle(const Point3& axis, double angle_rad,
                                        const Point3& t = Point3::Zero()) {
    return {Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix(),
            t};
  }

  Point3 apply(const Point3& p) const { return rotation * p + translation; }
  Point3 operator*(const Point3& p) const { return apply(p); }

  // (this * other)(p) == this(other(p))
  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  RigidTransform inverse() const {
    Matrix3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  // Orthonormal with det = +1 and finite translation.
  bool is_valid(double tol = 1e-9) const;
};

// Angle of the relative rotation a^T b, in radians.
double rotation_angle_between(const Matrix3& a, const Matrix3& b);

// Camera pose whose +z optical axis points from eye to target, with image
// +v (camera +y) aligned with world -up. World frames here are z-up.
RigidTransform look_at(const Point3& eye, const Point3& target,
                       const Point3& up = Point3::UnitZ());

}  // namespace msense
