#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msense/events.hpp"
#include "msense/tracking.hpp"

namespace msense {

using Point2 = Eigen::Vector2d;

// Convex polygon footprint in world x-y extruded over [z_min, z_max).
struct Zone {
  std::string id;
  std::vector<Point2> footprint;  // counter-clockwise
  double z_min = 0.0;
  double z_max = 2.0;
  bool on_exit_alarm = false;

  // Throws kConfig: fewer than 3 vertices, collinear, non-convex, clockwise,
  // or an empty height range.
  void validate() const;
};

// Half-plane test; the polygon boundary counts as inside, the top face does
// not.
bool zone_contains(const Zone& zone, const Point3& p);

// Per (track, zone) debounced occupancy. A raw containment change must hold
// for `debounce_frames` consecutive frames before it is reported.
class ZoneMonitor {
 public:
  explicit ZoneMonitor(std::vector<Zone> zones, int debounce_frames = 2);

  // `tracks` is the confirmed snapshot for one fused frame. State for tracks
  // missing from the snapshot is dropped without emitting.
  std::vector<Event> step(std::span<const Track> tracks, double timestamp);

  const std::vector<Zone>& zones() const { return zones_; }
  bool is_alarm(const Event& e) const;
  // Debounced occupants per zone id, ordered by track id.
  std::map<std::string, std::vector<std::int64_t>> occupants() const;

 private:
  struct PairState {
    bool inside = false;
    int pending = 0;  // consecutive frames disagreeing with `inside`
  };

  std::vector<Zone> zones_;
  int debounce_;
  std::map<std::pair<std::int64_t, std::size_t>, PairState> state_;
};

}  // namespace msense
