#include "msense/tracking.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "msense/error.hpp"

namespace msense {

namespace {

using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat36 = Eigen::Matrix<double, 3, 6>;
using Mat3 = Eigen::Matrix3d;

Mat36 measurement_matrix() {
  Mat36 h = Mat36::Zero();
  h.leftCols<3>().setIdentity();
  return h;
}

// Forbidden assignments cost this much; finite so potentials stay exact.
constexpr double kForbidden = 1e9;

}  // namespace

std::string_view to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::kTentative: return "tentative";
    case TrackStatus::kConfirmed: return "confirmed";
    case TrackStatus::kDeleted: return "deleted";
  }
  return "unknown";
}

void TrackerParams::validate() const {
  if (!(gate_distance > 0) || confirm_hits < 1 || max_misses < 0 ||
      !(process_noise_accel >= 0) || !(measurement_noise >= 0) ||
      !(init_velocity_std >= 0)) {
    throw Error(ErrorCode::kDomain, "invalid tracker parameters");
  }
}

Track predict(const Track& track, double dt, const TrackerParams& params) {
  if (!(dt >= 0.0)) throw Error(ErrorCode::kDomain, "predict: negative dt");
  TrackCovariance f = TrackCovariance::Identity();
  f.topRightCorner<3, 3>() = dt * Mat3::Identity();

  const double q = params.process_noise_accel * params.process_noise_accel;
  TrackCovariance qm = TrackCovariance::Zero();
  qm.topLeftCorner<3, 3>() = (q * dt * dt * dt * dt / 4.0) * Mat3::Identity();
  qm.topRightCorner<3, 3>() = (q * dt * dt * dt / 2.0) * Mat3::Identity();
  qm.bottomLeftCorner<3, 3>() = qm.topRightCorner<3, 3>();
  qm.bottomRightCorner<3, 3>() = (q * dt * dt) * Mat3::Identity();

  Track out = track;
  out.state = f * track.state;
  out.covariance = f * track.covariance * f.transpose() + qm;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

Mat63 kalman_gain(const Track& track, const TrackerParams& params) {
  const Mat36 h = measurement_matrix();
  const double r = params.measurement_noise * params.measurement_noise;
  Mat3 s = h * track.covariance * h.transpose() + r * Mat3::Identity();
  Mat63 pht = track.covariance * h.transpose();
  // K = P H^T S^-1, solved as S K^T = H P.
  Eigen::LDLT<Mat3> ldlt(s);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-15) {
    return pht * s.completeOrthogonalDecomposition().pseudoInverse();
  }
  return ldlt.solve(pht.transpose()).transpose();
}

Track update(const Track& track, const Object3D& obs, const TrackerParams& params) {
  if (track.status == TrackStatus::kDeleted) {
    throw Error(ErrorCode::kLifecycle, "update on a deleted track");
  }
  const Mat36 h = measurement_matrix();
  const double r = params.measurement_noise * params.measurement_noise;
  Mat63 k = kalman_gain(track, params);

  Track out = track;
  Point3 innovation = obs.centroid - track.position();
  out.state = track.state + k * innovation;
  TrackCovariance ikh = TrackCovariance::Identity() - k * h;
  out.covariance = ikh * track.covariance * ikh.transpose() + r * k * k.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  out.hits += 1;
  out.misses = 0;
  if (out.status == TrackStatus::kTentative && out.hits >= params.confirm_hits) {
    out.status = TrackStatus::kConfirmed;
  }
  return out;
}

double Association::total_cost() const {
  double c = 0.0;
  for (const auto& m : matches) c += m.distance;
  return c;
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  // Shortest augmenting path with row/column potentials, O(n^3).
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      int i0 = p[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

Association associate(std::span<const Track> tracks, std::span<const Object3D> objects,
                      double gate) {
  Association out;
  const std::size_t nt = tracks.size();
  const std::size_t no = objects.size();
  if (nt == 0 || no == 0) {
    for (std::size_t i = 0; i < nt; ++i) out.unmatched_tracks.push_back(i);
    for (std::size_t j = 0; j < no; ++j) out.unmatched_objects.push_back(j);
    return out;
  }

  // Rows: tracks then one "unmatched" slot per object. Columns: objects then
  // one "unmatched" slot per track.
  const std::size_t n = nt + no;
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(n, n, kForbidden);
  Eigen::MatrixXd dist(nt, no);
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 0; j < no; ++j) {
      double d = (tracks[i].position() - objects[j].centroid).norm();
      dist(i, j) = d;
      if (d <= gate && tracks[i].class_id == objects[j].class_id) cost(i, j) = d;
    }
    cost(i, no + i) = gate;
  }
  for (std::size_t j = 0; j < no; ++j) {
    cost(nt + j, j) = gate;
    for (std::size_t k = 0; k < nt; ++k) cost(nt + j, no + k) = 0.0;
  }

  std::vector<int> assign = solve_assignment(cost);
  std::vector<char> object_used(no, 0);
  for (std::size_t i = 0; i < nt; ++i) {
    auto j = static_cast<std::size_t>(assign[i]);
    if (j < no && cost(i, j) < kForbidden) {
      out.matches.push_back({i, j, dist(i, j)});
      object_used[j] = 1;
    } else {
      out.unmatched_tracks.push_back(i);
    }
  }
  for (std::size_t j = 0; j < no; ++j)
    if (!object_used[j]) out.unmatched_objects.push_back(j);
  return out;
}

Tracker::Tracker(TrackerParams params) : params_(params) { params_.validate(); }

Track Tracker::spawn(const Object3D& obj, double timestamp) {
  Track t;
  t.id = next_id_++;
  t.state.head<3>() = obj.centroid;
  t.class_id = obj.class_id;
  const double pos_var = params_.measurement_noise * params_.measurement_noise;
  const double vel_var = params_.init_velocity_std * params_.init_velocity_std;
  t.covariance.topLeftCorner<3, 3>() = pos_var * Mat3::Identity();
  t.covariance.bottomRightCorner<3, 3>() = vel_var * Mat3::Identity();
  t.hits = 1;
  t.status = t.hits >= params_.confirm_hits ? TrackStatus::kConfirmed : TrackStatus::kTentative;
  t.last_timestamp = timestamp;
  return t;
}

StepResult Tracker::step(std::span<const Object3D> objects, double timestamp) {
  if (started_ && timestamp < last_timestamp_) {
    throw Error(ErrorCode::kOrdering, "tracker timestamps must be non-decreasing");
  }
  const double dt = started_ ? timestamp - last_timestamp_ : 0.0;
  started_ = true;
  last_timestamp_ = timestamp;

  for (auto& t : tracks_) t = predict(t, dt, params_);

  Association a = associate(tracks_, objects, params_.gate_distance);
  StepResult out;
  for (const auto& m : a.matches) {
    tracks_[m.track] = update(tracks_[m.track], objects[m.object], params_);
    tracks_[m.track].last_timestamp = timestamp;
  }
  for (std::size_t i : a.unmatched_tracks) {
    Track& t = tracks_[i];
    t.misses += 1;
    if (t.misses > params_.max_misses) {
      t.status = TrackStatus::kDeleted;
      out.dead.push_back(t.id);
    }
  }
  std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::kDeleted; });
  for (std::size_t j : a.unmatched_objects) {
    tracks_.push_back(spawn(objects[j], timestamp));
    out.born.push_back(tracks_.back().id);
  }
  out.tracks = tracks_;
  return out;
}

}  // namespace msense
