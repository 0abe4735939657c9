#include <doctest.h>

#include <random>
#include <sstream>

#include "msense/cloud.hpp"
#include "test_util.hpp"

using namespace msense;

namespace {

CameraIntrinsics tiny_k() {
  CameraIntrinsics k;
  k.fx = k.fy = 2.0;
  k.cx = k.cy = 1.0;
  k.width = k.height = 2;
  return k;
}

PointCloud cloud_of(std::initializer_list<Point3> pts) {
  PointCloud c;
  c.points.assign(pts.begin(), pts.end());
  return c;
}

PointCloud random_cloud(std::mt19937_64& rng, int n, double extent) {
  PointCloud c;
  for (int i = 0; i < n; ++i) c.points.push_back(testing::random_point(rng, -extent, extent));
  return c;
}

}  // namespace

TEST_SUITE("cloud") {
  TEST_CASE("cloud_from_depth examples") {
    CameraIntrinsics k = tiny_k();
    CHECK(cloud_from_depth(DepthMap(2, 2), k, {}).empty());
    DepthMap d(2, 2, 3.0f);
    PointCloud c = cloud_from_depth(d, k, {});
    REQUIRE(c.size() == 4);
    for (const auto& p : c.points) CHECK(p.z() == doctest::Approx(3.0));
    CHECK(c.points[0].isApprox(Point3(-1.5, -1.5, 3.0)));
    CHECK(cloud_from_depth(d, k, {}, 2).size() == 1);
    PointCloud tagged = cloud_from_depth(d, k, {}, 1, 7);
    REQUIRE(tagged.camera_ids.size() == 4);
    CHECK(tagged.camera_ids[3] == 7);
  }

  TEST_CASE("apply_transform examples") {
    PointCloud c = cloud_of({{0, 0, 0}, {1, 2, 3}});
    PointCloud same = apply_transform(c, RigidTransform::identity());
    CHECK(same.points == c.points);
    PointCloud moved = apply_transform(cloud_of({{0, 0, 0}}), RigidTransform::from_translation({1, 2, 3}));
    CHECK(moved.points[0] == Point3(1, 2, 3));
    PointCloud rot = apply_transform(cloud_of({{1, 0, 0}}),
                                     RigidTransform::from_axis_angle(Point3::UnitZ(), M_PI / 2));
    CHECK((rot.points[0] - Point3(0, 1, 0)).norm() < 1e-12);
  }

  TEST_CASE("voxel_downsample examples") {
    PointCloud a = voxel_downsample(cloud_of({{0.1, 0.1, 0.1}, {0.2, 0.2, 0.2}}), 1.0);
    REQUIRE(a.size() == 1);
    CHECK(a.points[0].isApprox(Point3(0.15, 0.15, 0.15)));
    CHECK(voxel_downsample(cloud_of({{0.1, 0, 0}, {1.6, 0, 0}}), 1.0).size() == 2);
    CHECK(voxel_downsample(PointCloud{}, 1.0).empty());
  }

  TEST_CASE("points on a voxel face belong to the higher cell") {
    VoxelGrid g(0.5);
    CHECK(g.index_of({0.5, 0, 0}) == VoxelIndex{1, 0, 0});
    CHECK(g.index_of({-0.5, 0, 0}) == VoxelIndex{-1, 0, 0});
    CHECK(g.index_of({-0.25, 0, 0}) == VoxelIndex{-1, 0, 0});
  }

  TEST_CASE("merge_clouds examples") {
    std::vector<PointCloud> none(2);
    CHECK(merge_clouds(none).empty());
    std::vector<PointCloud> two = {cloud_of({{0, 0, 0}, {1, 0, 0}}),
                                   cloud_of({{0, 1, 0}, {0, 0, 1}, {2, 2, 2}})};
    two[0].camera_ids = {4, 4};
    PointCloud m = merge_clouds(two);
    CHECK(m.size() == 5);
    REQUIRE(m.camera_ids.size() == 5);
    CHECK(m.camera_ids[0] == 4);
    CHECK(m.camera_ids[4] == -1);
  }

  TEST_CASE("merging duplicate clouds downsamples to the same set") {
    std::mt19937_64 rng(5);
    PointCloud c = random_cloud(rng, 500, 2.0);
    std::vector<PointCloud> twice = {c, c};
    PointCloud a = voxel_downsample(merge_clouds(twice), 0.3);
    PointCloud b = voxel_downsample(c, 0.3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK((a.points[i] - b.points[i]).norm() < 1e-12);
  }

  TEST_CASE("rigid transforms preserve pairwise distances") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      PointCloud c = random_cloud(rng, 40, 5.0);
      RigidTransform t = testing::random_transform(rng, M_PI, 10.0);
      PointCloud tc = apply_transform(c, t);
      double worst = 0;
      for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 1; j < c.size(); ++j)
          worst = std::max(worst, std::abs((c.points[i] - c.points[j]).norm() -
                                           (tc.points[i] - tc.points[j]).norm()));
      CHECK(worst < 1e-9);
    }
  }

  TEST_CASE("downsampled points stay inside their voxel") {
    std::mt19937_64 rng(9);
    PointCloud c = random_cloud(rng, 2000, 3.0);
    const double s = 0.4;
    VoxelGrid g(s);
    g.insert(c);
    PointCloud out = g.centroids();
    CHECK(out.size() == g.cells().size());
    CHECK(out.size() <= c.size());
    std::size_t i = 0;
    for (const auto& [idx, cell] : g.cells()) {
      Point3 lo = g.cell_min(idx);
      CHECK(cell.count >= 1);
      CHECK((out.points[i].array() >= lo.array() - 1e-12).all());
      CHECK((out.points[i].array() <= (lo.array() + s) + 1e-12).all());
      ++i;
    }
  }

  TEST_CASE("downsampling is idempotent once every point is alone in its voxel") {
    PointCloud c = cloud_of({{0.1, 0.1, 0.1}, {1.2, 0.3, 0.1}, {2.5, 2.5, -0.7}});
    PointCloud once = voxel_downsample(c, 1.0);
    PointCloud twice = voxel_downsample(once, 1.0);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(once.points[i] == twice.points[i]);
  }

  TEST_CASE("PLY round trip keeps order and camera ids") {
    PointCloud c = cloud_of({{0.5f, -1.25f, 3.0f}, {1e-3f, 2.0f, -4.5f}});
    c.camera_ids = {0, 3};
    std::stringstream ss;
    write_ply(ss, c);
    PointCloud back = read_ply(ss);
    REQUIRE(back.size() == 2);
    CHECK(back.points[0].isApprox(c.points[0], 1e-6));
    CHECK(back.points[1].isApprox(c.points[1], 1e-6));
    CHECK(back.camera_ids == c.camera_ids);

    std::stringstream plain;
    write_ply(plain, cloud_of({{1, 2, 3}}));
    CHECK_FALSE(read_ply(plain).has_camera_ids());
  }
}
