#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msense/events.hpp"
#include "msense/tracking.hpp"

namespace msense {

enum class RuleKind { kProximity, kApproach, kDistanceLevel, kZoneOccupancy };

std::string_view to_string(RuleKind k);
std::optional<RuleKind> rule_kind_from_string(std::string_view s);

// Anchor is either a fixed world point or "nearest track of this class".
struct Anchor {
  std::optional<Point3> point;
  std::optional<int> class_id;
};

struct Rule {
  std::string id;
  RuleKind kind = RuleKind::kProximity;
  int subject_class = 0;
  Anchor anchor;
  // Proximity
  double threshold = 1.0;
  double hysteresis = 0.10;  // re-arm at threshold * (1 + hysteresis)
  // Approach
  int window_k = 3;
  double min_step = 0.1;
  // DistanceLevel
  double d_min = 0.0;
  double d_max = 1.0;
  bool invert = false;
  double level_step = 0.05;
  // ZoneOccupancy: emits LevelChanged {"occupancy": n} whenever the number of
  // subject-class tracks inside the zone changes.
  std::string zone_id;

  void validate() const;
};

// clamp((d - d_min) / (d_max - d_min), 0, 1), optionally inverted.
double distance_level(const Rule& rule, double d);

// Quantized level index: round(level / level_step).
int level_bucket(const Rule& rule, double d);

// Stateful single-rule evaluators. Each is fed one distance per frame for one
// subject track; they are exposed individually so traces can be replayed.
class ProximityState {
 public:
  std::optional<Event> feed(const Rule& rule, std::int64_t track_id, double distance, double t);
  bool armed() const { return armed_; }

 private:
  bool armed_ = true;
};

class ApproachState {
 public:
  std::optional<Event> feed(const Rule& rule, std::int64_t track_id, double distance, double t);

 private:
  std::deque<double> history_;
  bool suppressed_ = false;
};

class LevelState {
 public:
  std::optional<Event> feed(const Rule& rule, std::int64_t track_id, double distance, double t);

 private:
  std::optional<int> last_bucket_;
};

// Trace helpers: feed a distance sequence for one track and collect events.
std::vector<Event> eval_proximity(const Rule& rule, std::span<const double> distances,
                                  std::span<const double> times, std::int64_t track_id = 1);
std::vector<Event> eval_approach(const Rule& rule, std::span<const double> distances,
                                 std::span<const double> times, std::int64_t track_id = 1);
std::vector<Event> eval_distance_level(const Rule& rule, std::span<const double> distances,
                                       std::span<const double> times, std::int64_t track_id = 1);

// Evaluates every rule against the confirmed tracks of one frame.
class RuleEngine {
 public:
  explicit RuleEngine(std::vector<Rule> rules);

  // `zone_occupants` maps zone id to the ids of tracks currently inside it
  // (debounced), used by ZoneOccupancy rules.
  std::vector<Event> step(std::span<const Track> tracks, double timestamp,
                          const std::map<std::string, std::vector<std::int64_t>>& zone_occupants = {});

  const std::vector<Rule>& rules() const { return rules_; }

 private:
  struct PerTrack {
    ProximityState proximity;
    ApproachState approach;
    LevelState level;
  };

  std::optional<double> anchor_distance(const Rule& rule, const Track& subject,
                                        std::span<const Track> tracks) const;

  std::vector<Rule> rules_;
  std::map<std::pair<std::size_t, std::int64_t>, PerTrack> state_;
  std::map<std::size_t, std::vector<std::int64_t>> occupants_;
};

}  // namespace msense
