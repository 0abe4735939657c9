#pragma once

#include <span>
#include <utility>
#include <vector>

#include "msense/cloud.hpp"
#include "msense/transform.hpp"

namespace msense {

struct Correspondence {
  Point3 source;
  Point3 target;
};

using CorrespondenceSet = std::vector<Correspondence>;

// Least-squares rigid transform minimizing sum |R s_i + t - t_i|^2. Kabsch on
// the centered cross-covariance with a determinant fix so R is a proper
// rotation. Throws kDegenerateInput for fewer than 3 pairs or collinear
// sources.
RigidTransform estimate_rigid(std::span<const Correspondence> pairs);

// Largest |R s_i + t - t_i| over the set.
double max_residual(std::span<const Correspondence> pairs, const RigidTransform& t);

struct IcpParams {
  int max_iterations = 50;
  double convergence_eps = 1e-6;   // meters, change of the gated residual
  double max_pair_distance = 0.5;  // meters
  double downsample_voxel = 0.05;  // meters, 0 disables downsampling

  void validate() const;
};

struct RegistrationResult {
  RigidTransform transform;
  double rms_residual = 0.0;  // over accepted pairs at the final transform
  int iterations = 0;
  bool converged = false;
  // Gated residual sqrt(mean(min(d^2, gate^2))) over all source points, one
  // entry per evaluated transform starting with `init`. Non-increasing.
  std::vector<double> residual_history;
};

// Point-to-point ICP: nearest-neighbour pairing within max_pair_distance via a
// uniform hash grid, then estimate_rigid on the pairs. Throws kNoOverlap when
// an iteration accepts no pair.
RegistrationResult icp_refine(const PointCloud& source, const PointCloud& target,
                              const RigidTransform& init, const IcpParams& p);

}  // namespace msense
