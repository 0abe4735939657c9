#include <doctest.h>

#include <cmath>
#include <random>

#include "msense/error.hpp"
#include "msense/geometry.hpp"
#include "test_util.hpp"

using namespace msense;

namespace {

CameraIntrinsics small_k() {
  CameraIntrinsics k;
  k.fx = k.fy = 100.0;
  k.cx = k.cy = 50.0;
  k.width = 200;
  k.height = 200;
  return k;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kDomain;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("principal point back-projects onto the optical axis") {
    CameraIntrinsics k;
    Point3 p = backproject_pixel({k.cx, k.cy}, 5.0, k);
    CHECK(p.isApprox(Point3(0, 0, 5)));
  }

  TEST_CASE("back-projection evaluates the pinhole equations") {
    Point3 p = backproject_pixel({150, 150}, 2.0, small_k());
    CHECK(p.x() == doctest::Approx(2.0));
    CHECK(p.y() == doctest::Approx(2.0));
    CHECK(p.z() == doctest::Approx(2.0));
  }

  TEST_CASE("depth outside the valid range is rejected") {
    CameraIntrinsics k;
    CHECK(code_of([&] { backproject_pixel({10, 10}, 25.0, k); }) == ErrorCode::kInvalidDepth);
    CHECK(code_of([&] { backproject_pixel({10, 10}, 0.1, k); }) == ErrorCode::kInvalidDepth);
    CHECK(code_of([&] { backproject_pixel({NAN, 10}, 2.0, k); }) == ErrorCode::kDomain);
  }

  TEST_CASE("projection examples") {
    CameraIntrinsics k;
    Projection a = project_point({0, 0, 5}, k);
    CHECK(a.pixel.u == k.cx);
    CHECK(a.pixel.v == k.cy);
    CHECK(a.depth == 5.0);
    Projection b = project_point({2, 2, 2}, small_k());
    CHECK(b.pixel.u == doctest::Approx(150));
    CHECK(b.pixel.v == doctest::Approx(150));
    CHECK(b.depth == 2.0);
    CHECK(code_of([&] { project_point({0, 0, -1}, k); }) == ErrorCode::kBehindCamera);
    CHECK(code_of([&] { project_point({0, 0, 0}, k); }) == ErrorCode::kBehindCamera);
  }

  TEST_CASE("intrinsics invariants") {
    CameraIntrinsics k;
    CHECK(k.is_valid());
    k.cx = k.width;
    CHECK_FALSE(k.is_valid());
    CHECK(code_of([&] { k.validate(); }) == ErrorCode::kDomain);
    CameraIntrinsics d;
    d.depth_min = 5.0;
    d.depth_max = 5.0;
    CHECK_FALSE(d.is_valid());
  }

  TEST_CASE("back-projection is linear in depth") {
    CameraIntrinsics k;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, k.width), v(0, k.height), z(1.0, 4.0),
        a(0.25, 4.0);
    for (int i = 0; i < 200; ++i) {
      Pixel p{u(rng), v(rng)};
      double zz = z(rng), alpha = a(rng);
      Point3 lhs = backproject_pixel(p, alpha * zz, k);
      Point3 rhs = alpha * backproject_pixel(p, zz, k);
      CHECK((lhs - rhs).norm() <= 1e-12 * lhs.norm());
    }
  }

  TEST_CASE("shifting the principal point shifts X by -delta*Z/fx") {
    CameraIntrinsics k;
    CameraIntrinsics k2 = k;
    const double delta = 7.25;
    k2.cx += delta;
    Point3 a = backproject_pixel({300, 200}, 3.0, k);
    Point3 b = backproject_pixel({300, 200}, 3.0, k2);
    CHECK(b.x() - a.x() == doctest::Approx(-delta * 3.0 / k.fx).epsilon(1e-12));
    CHECK(b.y() == a.y());
    CHECK(b.z() == a.z());
  }

  TEST_CASE("round trip project then back-project") {
    CameraIntrinsics k;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> x(-3, 3), z(0.5, 19.5);
    int checked = 0;
    for (int i = 0; i < 2000; ++i) {
      Point3 p(x(rng), x(rng), z(rng));
      Projection pr = project_point(p, k);
      if (pr.pixel.u < 0 || pr.pixel.u >= k.width || pr.pixel.v < 0 || pr.pixel.v >= k.height) continue;
      Point3 q = backproject_pixel(pr.pixel, pr.depth, k);
      CHECK((q - p).norm() <= 1e-9 * p.norm());
      ++checked;
    }
    CHECK(checked > 100);
  }

  TEST_CASE("median is the lower median of valid samples") {
    CHECK(median_depth({2, 2, 2, 8}) == 2.0);
    CHECK(median_depth({1, 3}) == 1.0);
    CHECK(median_depth({5}) == 5.0);
    CHECK(code_of([] { median_depth({}); }) == ErrorCode::kNoDepth);
  }

  TEST_CASE("bbox depth samples {2, 2, 2, 8, invalid} give 2") {
    CameraIntrinsics k = small_k();
    DepthMap d(k.width, k.height);
    const float vals[] = {2, 2, 2, 8, NAN};
    for (int i = 0; i < 5; ++i) d.at(10 + i, 20) = vals[i];
    Detection2D det;
    det.bbox = {10, 20, 5, 1};
    auto samples = sample_bbox_depths(det.bbox, d, k);
    CHECK(samples.size() == 4);
    Object3D o = bbox_to_object3d(det, d, k, RigidTransform::identity());
    CHECK(o.centroid.z() == doctest::Approx(2.0));
  }

  TEST_CASE("constant depth and centred bbox give an on-axis centroid") {
    CameraIntrinsics k;
    DepthMap d(k.width, k.height, 4.0f);
    Detection2D det;
    det.bbox = {k.cx - 20, k.cy - 30, 40, 60};
    det.confidence = 0.7;
    det.class_id = 3;
    Object3D o = bbox_to_object3d(det, d, k, RigidTransform::identity());
    CHECK(o.centroid.isApprox(Point3(0, 0, 4), 1e-12));
    CHECK(o.class_id == 3);
    CHECK(o.confidence == doctest::Approx(0.7));
    CHECK(o.aabb.contains(o.centroid));
    CHECK((o.aabb.min.array() <= o.aabb.max.array()).all());
    CHECK(o.aabb.min.x() == doctest::Approx(-20 * 4.0 / k.fx));
    CHECK(o.aabb.max.y() == doctest::Approx(30 * 4.0 / k.fy));
  }

  TEST_CASE("pose maps the centroid into the world frame") {
    CameraIntrinsics k;
    DepthMap d(k.width, k.height, 4.0f);
    Detection2D det;
    det.bbox = {k.cx - 10, k.cy - 10, 20, 20};
    RigidTransform pose = RigidTransform::from_axis_angle(Point3::UnitZ(), M_PI / 2, {1, 2, 3});
    Object3D o = bbox_to_object3d(det, d, k, pose);
    CHECK(o.centroid.isApprox(pose.apply(Point3(0, 0, 4)), 1e-12));
    CHECK(o.aabb.contains(o.centroid, 1e-12));
  }

  TEST_CASE("bbox over invalid pixels has no depth") {
    CameraIntrinsics k;
    DepthMap d(k.width, k.height);
    Detection2D det;
    det.bbox = {100, 100, 30, 30};
    CHECK(code_of([&] { bbox_to_object3d(det, d, k, {}); }) == ErrorCode::kNoDepth);
  }

  TEST_CASE("large boxes are read on a 64x64 subgrid") {
    CameraIntrinsics k;
    DepthMap d(k.width, k.height, 3.0f);
    CHECK(sample_bbox_depths({0, 0, 64, 64}, d, k).size() == 64 * 64);
    CHECK(sample_bbox_depths({0, 0, 640, 360}, d, k).size() == 64 * 64);
    CHECK(sample_bbox_depths({0, 0, 10, 5}, d, k).size() == 50);
  }

  TEST_CASE("look_at points +z at the target with +y down") {
    RigidTransform pose = look_at({0, 0, 1}, {0, 5, 1});
    CHECK(pose.is_valid());
    CHECK(pose.rotation.col(2).isApprox(Point3(0, 1, 0), 1e-12));
    CHECK(pose.rotation.col(1).isApprox(Point3(0, 0, -1), 1e-12));
    CHECK(pose.rotation.col(0).isApprox(Point3(1, 0, 0), 1e-12));
  }
}
