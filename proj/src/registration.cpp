#include "msense/registration.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "msense/error.hpp"

namespace msense {

RigidTransform estimate_rigid(std::span<const Correspondence> pairs) {
  if (pairs.size() < 3) {
    throw Error(ErrorCode::kDegenerateInput,
                "rigid estimation needs at least 3 correspondences");
  }
  Point3 src_mean = Point3::Zero();
  Point3 dst_mean = Point3::Zero();
  for (const auto& c : pairs) {
    src_mean += c.source;
    dst_mean += c.target;
  }
  const double n = static_cast<double>(pairs.size());
  src_mean /= n;
  dst_mean /= n;

  Matrix3 cross = Matrix3::Zero();
  Matrix3 spread = Matrix3::Zero();
  for (const auto& c : pairs) {
    Point3 s = c.source - src_mean;
    cross += s * (c.target - dst_mean).transpose();
    spread += s * s.transpose();
  }

  // Collinear (or coincident) sources leave the rotation about that line free.
  Eigen::SelfAdjointEigenSolver<Matrix3> spread_eig(spread);
  const auto& ev = spread_eig.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    throw Error(ErrorCode::kDegenerateInput,
                "correspondence sources are collinear or coincident");
  }

  Eigen::JacobiSVD<Matrix3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix3& u = svd.matrixU();
  const Matrix3& v = svd.matrixV();
  Matrix3 d = Matrix3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;

  RigidTransform t;
  t.rotation = v * d * u.transpose();
  t.translation = dst_mean - t.rotation * src_mean;
  return t;
}

double max_residual(std::span<const Correspondence> pairs, const RigidTransform& t) {
  double worst = 0.0;
  for (const auto& c : pairs) worst = std::max(worst, (t.apply(c.source) - c.target).norm());
  return worst;
}

void IcpParams::validate() const {
  if (max_iterations < 1 || !(convergence_eps > 0.0) || !(max_pair_distance > 0.0) ||
      !(downsample_voxel >= 0.0)) {
    throw Error(ErrorCode::kDomain, "invalid ICP parameters");
  }
}

namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 19349663ULL;
    h ^= static_cast<std::uint64_t>(k.z) * 83492791ULL;
    return static_cast<std::size_t>(h);
  }
};

// Uniform grid with cell size equal to the search radius, so any neighbour
// within the radius lives in the 27 surrounding cells.
class HashGrid {
 public:
  HashGrid(const std::vector<Point3>& points, double radius)
      : points_(points), cell_(radius) {
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(points[i])].push_back(i);
  }

  // Index of the nearest point within the radius, or -1.
  long nearest(const Point3& q, double* dist2) const {
    const CellKey c = key(q);
    long best = -1;
    double best_d2 = cell_ * cell_;
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == cells_.end()) continue;
          for (std::size_t i : it->second) {
            double d2 = (points_[i] - q).squaredNorm();
            if (d2 < best_d2 || (d2 == best_d2 && (best < 0 || static_cast<long>(i) < best))) {
              best_d2 = d2;
              best = static_cast<long>(i);
            }
          }
        }
    if (best >= 0) *dist2 = best_d2;
    return best;
  }

 private:
  CellKey key(const Point3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }

  const std::vector<Point3>& points_;
  double cell_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> cells_;
};

struct Pairing {
  CorrespondenceSet pairs;
  double gated_residual = 0.0;
  double rms = 0.0;
};

Pairing pair_up(const std::vector<Point3>& src, const HashGrid& grid,
                const std::vector<Point3>& dst, const RigidTransform& t,
                double gate) {
  Pairing out;
  out.pairs.reserve(src.size());
  double gated = 0.0;
  double accepted = 0.0;
  for (const auto& s : src) {
    double d2 = 0.0;
    long j = grid.nearest(t.apply(s), &d2);
    if (j < 0) {
      gated += gate * gate;
      continue;
    }
    out.pairs.push_back({s, dst[static_cast<std::size_t>(j)]});
    gated += d2;
    accepted += d2;
  }
  out.gated_residual = std::sqrt(gated / static_cast<double>(src.size()));
  if (!out.pairs.empty()) out.rms = std::sqrt(accepted / static_cast<double>(out.pairs.size()));
  return out;
}

}  // namespace

RegistrationResult icp_refine(const PointCloud& source, const PointCloud& target,
                              const RigidTransform& init, const IcpParams& p) {
  p.validate();
  PointCloud src = p.downsample_voxel > 0 ? voxel_downsample(source, p.downsample_voxel) : source;
  PointCloud dst = p.downsample_voxel > 0 ? voxel_downsample(target, p.downsample_voxel) : target;
  if (src.empty() || dst.empty()) {
    throw Error(ErrorCode::kDomain, "ICP needs non-empty clouds");
  }

  HashGrid grid(dst.points, p.max_pair_distance);
  RegistrationResult result;
  result.transform = init;

  Pairing current = pair_up(src.points, grid, dst.points, init, p.max_pair_distance);
  result.residual_history.push_back(current.gated_residual);

  for (int it = 1; it <= p.max_iterations; ++it) {
    if (current.pairs.empty()) {
      std::ostringstream os;
      os << "ICP iteration " << it << " accepted no pairs within "
         << p.max_pair_distance << " m";
      throw Error(ErrorCode::kNoOverlap, os.str());
    }
    RigidTransform next;
    try {
      next = estimate_rigid(current.pairs);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateInput) throw;
      break;  // too few distinct pairs to improve on the current pose
    }
    Pairing fresh = pair_up(src.points, grid, dst.points, next, p.max_pair_distance);
    // Fitting cannot raise the gated objective in exact arithmetic; reject
    // rounding-level regressions so the reported sequence stays monotone.
    if (fresh.gated_residual > current.gated_residual) {
      result.iterations = it;
      result.converged = true;
      break;
    }
    double delta = current.gated_residual - fresh.gated_residual;
    result.transform = next;
    current = std::move(fresh);
    result.residual_history.push_back(current.gated_residual);
    result.iterations = it;
    if (delta < p.convergence_eps) {
      result.converged = true;
      break;
    }
  }
  result.rms_residual = current.rms;
  return result;
}

}  // namespace msense
