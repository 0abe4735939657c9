#include "msense/cloud.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "msense/error.hpp"

namespace msense {

VoxelGrid::VoxelGrid(double voxel_size, const Point3& origin)
    : size_(voxel_size), origin_(origin) {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw Error(ErrorCode::kDomain, "voxel size must be positive");
  }
}

VoxelIndex VoxelGrid::index_of(const Point3& p) const {
  Point3 q = (p - origin_) / size_;
  return {static_cast<std::int64_t>(std::floor(q.x())),
          static_cast<std::int64_t>(std::floor(q.y())),
          static_cast<std::int64_t>(std::floor(q.z()))};
}

void VoxelGrid::insert(const Point3& p) {
  Cell& c = cells_[index_of(p)];
  c.sum += p;
  ++c.count;
}

void VoxelGrid::insert(const PointCloud& cloud) {
  for (const auto& p : cloud.points) insert(p);
}

Point3 VoxelGrid::cell_min(const VoxelIndex& idx) const {
  return origin_ + size_ * Point3(static_cast<double>(idx[0]),
                                  static_cast<double>(idx[1]),
                                  static_cast<double>(idx[2]));
}

PointCloud VoxelGrid::centroids() const {
  PointCloud out;
  out.points.reserve(cells_.size());
  for (const auto& [idx, cell] : cells_) out.points.push_back(cell.centroid());
  return out;
}

PointCloud cloud_from_depth(const DepthMap& depth, const CameraIntrinsics& k,
                            const RigidTransform& pose, int stride, int camera_id) {
  if (stride < 1) throw Error(ErrorCode::kDomain, "stride must be >= 1");
  if (depth.width != k.width || depth.height != k.height) {
    throw Error(ErrorCode::kDomain, "depth map size does not match intrinsics");
  }
  PointCloud out;
  for (int j = 0; j < depth.height; j += stride) {
    for (int i = 0; i < depth.width; i += stride) {
      float z = depth.at(i, j);
      if (!DepthMap::is_valid(z) || !k.in_depth_range(z)) continue;
      out.points.push_back(pose.apply(backproject_pixel(
          {static_cast<double>(i), static_cast<double>(j)}, z, k)));
      if (camera_id >= 0) out.camera_ids.push_back(camera_id);
    }
  }
  return out;
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out;
  out.camera_ids = cloud.camera_ids;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
  return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  VoxelGrid grid(voxel_size);
  grid.insert(cloud);
  return grid.centroids();
}

PointCloud merge_clouds(std::span<const PointCloud> clouds) {
  PointCloud out;
  std::size_t total = 0;
  bool ids = false;
  for (const auto& c : clouds) {
    total += c.size();
    ids = ids || c.has_camera_ids();
  }
  out.points.reserve(total);
  if (ids) out.camera_ids.reserve(total);
  for (const auto& c : clouds) {
    out.points.insert(out.points.end(), c.points.begin(), c.points.end());
    if (!ids) continue;
    if (c.has_camera_ids()) {
      out.camera_ids.insert(out.camera_ids.end(), c.camera_ids.begin(),
                            c.camera_ids.end());
    } else {
      out.camera_ids.insert(out.camera_ids.end(), c.size(), -1);
    }
  }
  return out;
}

void write_ply(std::ostream& os, const PointCloud& cloud) {
  bool ids = cloud.has_camera_ids();
  os << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
     << "property float x\nproperty float y\nproperty float z\n";
  if (ids) os << "property int camera_id\n";
  os << "end_header\n";
  os << std::setprecision(9);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    os << static_cast<float>(p.x()) << ' ' << static_cast<float>(p.y()) << ' '
       << static_cast<float>(p.z());
    if (ids) os << ' ' << cloud.camera_ids[i];
    os << '\n';
  }
}

void write_ply(const std::string& path, const PointCloud& cloud) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::kInput, "cannot open " + path + " for writing");
  write_ply(os, cloud);
}

PointCloud read_ply(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "ply") {
    throw Error(ErrorCode::kInput, "PLY: missing magic");
  }
  std::size_t count = 0;
  std::vector<std::string> props;
  bool in_vertex = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw Error(ErrorCode::kInput, "PLY: only ascii supported");
    } else if (tok == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ls >> count;
    } else if (tok == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (tok == "end_header") {
      break;
    }
  }
  int ix = -1, iy = -1, iz = -1, icam = -1;
  for (int i = 0; i < static_cast<int>(props.size()); ++i) {
    if (props[i] == "x") ix = i;
    if (props[i] == "y") iy = i;
    if (props[i] == "z") iz = i;
    if (props[i] == "camera_id") icam = i;
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    throw Error(ErrorCode::kInput, "PLY: vertex element lacks x/y/z");
  }
  PointCloud cloud;
  cloud.points.reserve(count);
  std::vector<double> vals(props.size());
  for (std::size_t n = 0; n < count; ++n) {
    if (!std::getline(is, line)) {
      throw Error(ErrorCode::kInput, "PLY: truncated vertex list");
    }
    std::istringstream ls(line);
    for (auto& v : vals) {
      if (!(ls >> v)) throw Error(ErrorCode::kInput, "PLY: malformed vertex line");
    }
    Point3 p(static_cast<float>(vals[ix]), static_cast<float>(vals[iy]),
             static_cast<float>(vals[iz]));
    if (!p.allFinite()) throw Error(ErrorCode::kInput, "PLY: non-finite vertex");
    cloud.points.push_back(p);
    if (icam >= 0) cloud.camera_ids.push_back(static_cast<int>(vals[icam]));
  }
  return cloud;
}

PointCloud read_ply(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kInput, "cannot open " + path);
  return read_ply(is);
}

}  // namespace msense
