#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "msense/depth_map.hpp"
#include "msense/geometry.hpp"
#include "msense/transform.hpp"

namespace msense {

struct PointCloud {
  std::vector<Point3> points;
  // Either empty or one entry per point.
  std::vector<int> camera_ids;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_camera_ids() const { return !camera_ids.empty(); }
};

using VoxelIndex = std::array<std::int64_t, 3>;

// Sparse voxel accumulator. A point p falls in cell floor((p - origin) / size)
// per axis, so points on a shared face belong to the higher cell.
class VoxelGrid {
 public:
  struct Cell {
    Point3 sum = Point3::Zero();
    std::size_t count = 0;
    Point3 centroid() const { return sum / static_cast<double>(count); }
  };

  explicit VoxelGrid(double voxel_size, const Point3& origin = Point3::Zero());

  VoxelIndex index_of(const Point3& p) const;
  void insert(const Point3& p);
  void insert(const PointCloud& cloud);

  double voxel_size() const { return size_; }
  const Point3& origin() const { return origin_; }
  const std::map<VoxelIndex, Cell>& cells() const { return cells_; }

  // Lower corner of a cell.
  Point3 cell_min(const VoxelIndex& idx) const;

  // One centroid per occupied cell, in lexicographic cell order.
  PointCloud centroids() const;

 private:
  double size_;
  Point3 origin_;
  std::map<VoxelIndex, Cell> cells_;
};

PointCloud cloud_from_depth(const DepthMap& depth, const CameraIntrinsics& k,
                            const RigidTransform& pose, int stride = 1,
                            int camera_id = -1);

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t);

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size);

PointCloud merge_clouds(std::span<const PointCloud> clouds);

// ASCII PLY with float x/y/z (and an int camera_id when present).
void write_ply(std::ostream& os, const PointCloud& cloud);
void write_ply(const std::string& path, const PointCloud& cloud);
PointCloud read_ply(std::istream& is);
PointCloud read_ply(const std::string& path);

}  // namespace msense
