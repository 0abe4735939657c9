#include "msense/rules.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

#include "msense/error.hpp"

namespace msense {

std::string_view to_string(RuleKind k) {
  switch (k) {
    case RuleKind::kProximity: return "proximity";
    case RuleKind::kApproach: return "approach";
    case RuleKind::kDistanceLevel: return "distance_level";
    case RuleKind::kZoneOccupancy: return "zone_occupancy";
  }
  return "unknown";
}

std::optional<RuleKind> rule_kind_from_string(std::string_view s) {
  for (auto k : {RuleKind::kProximity, RuleKind::kApproach, RuleKind::kDistanceLevel,
                 RuleKind::kZoneOccupancy}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

void Rule::validate() const {
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kConfig, "rule '" + id + "': " + why);
  };
  switch (kind) {
    case RuleKind::kProximity:
      if (!(threshold > 0)) fail("threshold must be > 0");
      if (!(hysteresis >= 0)) fail("hysteresis must be >= 0");
      break;
    case RuleKind::kApproach:
      if (window_k < 2) fail("window_k must be >= 2");
      if (!(min_step >= 0)) fail("min_step must be >= 0");
      break;
    case RuleKind::kDistanceLevel:
      if (!(d_min < d_max)) fail("d_min must be < d_max");
      if (!(level_step > 0 && level_step <= 1)) fail("level_step must be in (0, 1]");
      break;
    case RuleKind::kZoneOccupancy:
      if (zone_id.empty()) fail("zone_occupancy needs a zone id");
      return;
  }
  if (anchor.point.has_value() == anchor.class_id.has_value()) {
    fail("anchor must be exactly one of point or class");
  }
}

double distance_level(const Rule& rule, double d) {
  double level = std::clamp((d - rule.d_min) / (rule.d_max - rule.d_min), 0.0, 1.0);
  return rule.invert ? 1.0 - level : level;
}

int level_bucket(const Rule& rule, double d) {
  return static_cast<int>(std::lround(distance_level(rule, d) / rule.level_step));
}

namespace {

Event make_event(EventKind kind, const Rule& rule, std::int64_t track_id, double t) {
  Event e;
  e.kind = kind;
  e.timestamp = t;
  e.track_id = track_id;
  e.ref_id = rule.id;
  return e;
}

}  // namespace

std::optional<Event> ProximityState::feed(const Rule& rule, std::int64_t track_id,
                                          double distance, double t) {
  if (armed_ && distance < rule.threshold) {
    armed_ = false;
    Event e = make_event(EventKind::kProximityTriggered, rule, track_id, t);
    e.payload["distance"] = distance;
    return e;
  }
  if (!armed_ && distance >= rule.threshold * (1.0 + rule.hysteresis)) armed_ = true;
  return std::nullopt;
}

std::optional<Event> ApproachState::feed(const Rule& rule, std::int64_t track_id,
                                         double distance, double t) {
  history_.push_back(distance);
  while (history_.size() > static_cast<std::size_t>(rule.window_k)) history_.pop_front();
  if (history_.size() < static_cast<std::size_t>(rule.window_k)) return std::nullopt;

  bool approaching = true;
  for (std::size_t i = 1; i < history_.size(); ++i) {
    double step = history_[i - 1] - history_[i];
    if (!(step > 0.0 && step >= rule.min_step)) {
      approaching = false;
      break;
    }
  }
  if (!approaching) {
    suppressed_ = false;
    return std::nullopt;
  }
  if (suppressed_) return std::nullopt;
  suppressed_ = true;
  Event e = make_event(EventKind::kApproachDetected, rule, track_id, t);
  e.payload["distance"] = distance;
  e.payload["start_distance"] = history_.front();
  return e;
}

std::optional<Event> LevelState::feed(const Rule& rule, std::int64_t track_id,
                                      double distance, double t) {
  int bucket = level_bucket(rule, distance);
  if (last_bucket_ && *last_bucket_ == bucket) return std::nullopt;
  last_bucket_ = bucket;
  Event e = make_event(EventKind::kLevelChanged, rule, track_id, t);
  // Divide rather than multiply so the endpoints land on exactly 0 and 1.
  e.payload["level"] = bucket / std::round(1.0 / rule.level_step);
  e.payload["distance"] = distance;
  return e;
}

namespace {

template <typename State>
std::vector<Event> run_trace(const Rule& rule, std::span<const double> distances,
                             std::span<const double> times, std::int64_t track_id) {
  if (times.size() != distances.size()) {
    throw Error(ErrorCode::kDomain, "trace needs one timestamp per distance");
  }
  State state;
  std::vector<Event> out;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (auto e = state.feed(rule, track_id, distances[i], times[i])) out.push_back(*e);
  }
  return out;
}

}  // namespace

std::vector<Event> eval_proximity(const Rule& rule, std::span<const double> distances,
                                  std::span<const double> times, std::int64_t track_id) {
  return run_trace<ProximityState>(rule, distances, times, track_id);
}

std::vector<Event> eval_approach(const Rule& rule, std::span<const double> distances,
                                 std::span<const double> times, std::int64_t track_id) {
  return run_trace<ApproachState>(rule, distances, times, track_id);
}

std::vector<Event> eval_distance_level(const Rule& rule, std::span<const double> distances,
                                       std::span<const double> times, std::int64_t track_id) {
  return run_trace<LevelState>(rule, distances, times, track_id);
}

RuleEngine::RuleEngine(std::vector<Rule> rules) : rules_(std::move(rules)) {
  for (const auto& r : rules_) r.validate();
}

std::optional<double> RuleEngine::anchor_distance(const Rule& rule, const Track& subject,
                                                  std::span<const Track> tracks) const {
  if (rule.anchor.point) return (subject.position() - *rule.anchor.point).norm();
  std::optional<double> best;
  for (const auto& other : tracks) {
    if (other.id == subject.id || other.class_id != *rule.anchor.class_id) continue;
    double d = (subject.position() - other.position()).norm();
    if (!best || d < *best) best = d;
  }
  return best;
}

std::vector<Event> RuleEngine::step(
    std::span<const Track> tracks, double timestamp,
    const std::map<std::string, std::vector<std::int64_t>>& zone_occupants) {
  std::vector<Event> out;
  for (std::size_t ri = 0; ri < rules_.size(); ++ri) {
    const Rule& rule = rules_[ri];
    if (rule.kind == RuleKind::kZoneOccupancy) {
      std::vector<std::int64_t> now;
      if (auto it = zone_occupants.find(rule.zone_id); it != zone_occupants.end()) {
        for (std::int64_t id : it->second) {
          auto t = std::find_if(tracks.begin(), tracks.end(),
                                [&](const Track& tr) { return tr.id == id; });
          if (t != tracks.end() && t->class_id == rule.subject_class) now.push_back(id);
        }
      }
      std::sort(now.begin(), now.end());
      auto& prev = occupants_[ri];
      if (now.size() != prev.size()) {
        std::vector<std::int64_t> entered;
        std::set_difference(now.begin(), now.end(), prev.begin(), prev.end(),
                            std::back_inserter(entered));
        std::vector<std::int64_t> left;
        std::set_difference(prev.begin(), prev.end(), now.begin(), now.end(),
                            std::back_inserter(left));
        // Attribute the change to a track that is still live.
        std::int64_t who = 0;
        if (!entered.empty()) {
          who = entered.front();
        } else {
          for (std::int64_t id : left) {
            if (std::any_of(tracks.begin(), tracks.end(),
                            [&](const Track& tr) { return tr.id == id; })) {
              who = id;
              break;
            }
          }
          if (who == 0 && !now.empty()) who = now.front();
        }
        if (who != 0) {
          Event e = make_event(EventKind::kLevelChanged, rule, who, timestamp);
          e.payload["occupancy"] = static_cast<double>(now.size());
          out.push_back(std::move(e));
        }
      }
      prev = std::move(now);
      continue;
    }
    for (const auto& t : tracks) {
      if (t.class_id != rule.subject_class) continue;
      auto d = anchor_distance(rule, t, tracks);
      if (!d) continue;
      PerTrack& s = state_[{ri, t.id}];
      std::optional<Event> e;
      switch (rule.kind) {
        case RuleKind::kProximity: e = s.proximity.feed(rule, t.id, *d, timestamp); break;
        case RuleKind::kApproach: e = s.approach.feed(rule, t.id, *d, timestamp); break;
        case RuleKind::kDistanceLevel: e = s.level.feed(rule, t.id, *d, timestamp); break;
        case RuleKind::kZoneOccupancy: break;
      }
      if (e) out.push_back(std::move(*e));
    }
  }
  std::erase_if(state_, [&](const auto& kv) {
    return std::none_of(tracks.begin(), tracks.end(),
                        [&](const Track& t) { return t.id == kv.first.second; });
  });
  return out;
}

}  // namespace msense
