#include "msense/zones.hpp"

#include <cmath>
#include <set>

#include "msense/error.hpp"

namespace msense {

namespace {

double cross(const Point2& a, const Point2& b, const Point2& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

}  // namespace

void Zone::validate() const {
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kConfig, "zone '" + id + "': " + why);
  };
  const std::size_t n = footprint.size();
  if (n < 3) fail("footprint needs at least 3 vertices");
  if (!(z_min < z_max)) fail("z_range must satisfy min < max");
  bool any_turn = false;
  for (std::size_t i = 0; i < n; ++i) {
    double c = cross(footprint[i], footprint[(i + 1) % n], footprint[(i + 2) % n]);
    if (c < 0) fail("footprint must be convex and counter-clockwise");
    any_turn = any_turn || c > 0;
  }
  if (!any_turn) fail("footprint vertices are collinear");
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = footprint[i];
    const auto& b = footprint[(i + 1) % n];
    area2 += a.x() * b.y() - b.x() * a.y();
  }
  // Positive turns with winding > 1 would be a star polygon.
  double turn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Point2 e0 = footprint[(i + 1) % n] - footprint[i];
    Point2 e1 = footprint[(i + 2) % n] - footprint[(i + 1) % n];
    turn += std::atan2(e0.x() * e1.y() - e0.y() * e1.x(), e0.dot(e1));
  }
  if (!(area2 > 0) || turn > 2.0 * M_PI + 1e-6) fail("footprint must be a simple convex polygon");
}

bool zone_contains(const Zone& zone, const Point3& p) {
  if (!(p.z() >= zone.z_min && p.z() < zone.z_max)) return false;
  const Point2 q(p.x(), p.y());
  const std::size_t n = zone.footprint.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(zone.footprint[i], zone.footprint[(i + 1) % n], q) < 0) return false;
  }
  return true;
}

ZoneMonitor::ZoneMonitor(std::vector<Zone> zones, int debounce_frames)
    : zones_(std::move(zones)), debounce_(debounce_frames) {
  if (debounce_ < 1) throw Error(ErrorCode::kConfig, "debounce_frames must be >= 1");
  std::set<std::string> ids;
  for (const auto& z : zones_) {
    z.validate();
    if (!ids.insert(z.id).second) throw Error(ErrorCode::kConfig, "duplicate zone id '" + z.id + "'");
  }
}

bool ZoneMonitor::is_alarm(const Event& e) const {
  if (e.kind != EventKind::kZoneExit) return false;
  for (const auto& z : zones_)
    if (z.id == e.ref_id) return z.on_exit_alarm;
  return false;
}

std::map<std::string, std::vector<std::int64_t>> ZoneMonitor::occupants() const {
  std::map<std::string, std::vector<std::int64_t>> out;
  for (const auto& z : zones_) out[z.id];
  for (const auto& [key, s] : state_)
    if (s.inside) out[zones_[key.second].id].push_back(key.first);
  return out;
}

std::vector<Event> ZoneMonitor::step(std::span<const Track> tracks, double timestamp) {
  std::vector<Event> events;
  std::set<std::int64_t> live;
  for (const auto& t : tracks) {
    live.insert(t.id);
    for (std::size_t zi = 0; zi < zones_.size(); ++zi) {
      PairState& s = state_[{t.id, zi}];
      const bool raw = zone_contains(zones_[zi], t.position());
      if (raw == s.inside) {
        s.pending = 0;
        continue;
      }
      if (++s.pending < debounce_) continue;
      s.inside = raw;
      s.pending = 0;
      Event e;
      e.kind = raw ? EventKind::kZoneEntry : EventKind::kZoneExit;
      e.timestamp = timestamp;
      e.track_id = t.id;
      e.ref_id = zones_[zi].id;
      events.push_back(std::move(e));
    }
  }
  std::erase_if(state_, [&](const auto& kv) { return !live.contains(kv.first.first); });
  return events;
}

}  // namespace msense
