#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "msense/geometry.hpp"

namespace msense {

using TrackState = Eigen::Matrix<double, 6, 1>;       // position, velocity
using TrackCovariance = Eigen::Matrix<double, 6, 6>;

enum class TrackStatus { kTentative, kConfirmed, kDeleted };

std::string_view to_string(TrackStatus s);

struct TrackerParams {
  double gate_distance = 1.0;        // meters
  int confirm_hits = 3;
  int max_misses = 5;
  double process_noise_accel = 1.0;  // m/s^2 std
  double measurement_noise = 0.05;   // meters std
  double init_velocity_std = 2.0;    // m/s std for new tracks

  // Noise terms may be zero (noise-free oracle runs); the rest must be
  // positive.
  void validate() const;
};

struct Track {
  std::int64_t id = 0;
  TrackState state = TrackState::Zero();
  TrackCovariance covariance = TrackCovariance::Zero();
  int class_id = 0;
  int hits = 0;
  int misses = 0;
  TrackStatus status = TrackStatus::kTentative;
  double last_timestamp = 0.0;

  Point3 position() const { return state.head<3>(); }
  Point3 velocity() const { return state.tail<3>(); }
};

// Constant-velocity propagation with white-acceleration process noise.
Track predict(const Track& track, double dt, const TrackerParams& params);

// Kalman gain for a position measurement (6x3).
Eigen::Matrix<double, 6, 3> kalman_gain(const Track& track, const TrackerParams& params);

// Position-measurement correction (Joseph form). Bumps hits, clears misses,
// confirms at confirm_hits. Throws kLifecycle on a deleted track.
Track update(const Track& track, const Object3D& obs, const TrackerParams& params);

struct Match {
  std::size_t track;
  std::size_t object;
  double distance;
};

struct Association {
  std::vector<Match> matches;
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_objects;
  double total_cost() const;
};

// Optimal one-to-one assignment on centroid distance. Pairs farther than the
// gate or with different class ids are forbidden. Leaving a track or object
// unmatched costs `gate`, so every admissible match is preferred to none.
Association associate(std::span<const Track> tracks, std::span<const Object3D> objects,
                      double gate);

// Minimum-cost assignment for a square cost matrix (Hungarian method with
// potentials). Returns the column assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

struct StepResult {
  std::vector<Track> tracks;  // live tracks after the step, ordered by id
  std::vector<std::int64_t> born;
  std::vector<std::int64_t> dead;
};

// SORT-style multi-object tracker over 3D centroids. Single writer.
class Tracker {
 public:
  explicit Tracker(TrackerParams params = {});

  // predict -> associate -> update -> age misses -> spawn. Throws kOrdering
  // when timestamps go backwards.
  StepResult step(std::span<const Object3D> objects, double timestamp);

  const std::vector<Track>& tracks() const { return tracks_; }
  const TrackerParams& params() const { return params_; }

 private:
  Track spawn(const Object3D& obj, double timestamp);

  TrackerParams params_;
  std::vector<Track> tracks_;
  std::int64_t next_id_ = 1;
  double last_timestamp_ = 0.0;
  bool started_ = false;
};

}  // namespace msense
