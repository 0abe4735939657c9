#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace msense {

enum class EventKind {
  kZoneEntry,
  kZoneExit,
  kProximityTriggered,
  kApproachDetected,
  kLevelChanged,
};

std::string_view to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);

struct Event {
  EventKind kind = EventKind::kZoneEntry;
  double timestamp = 0.0;  // frame time, never the host clock
  std::int64_t track_id = 0;
  std::string ref_id;      // zone id or rule id
  std::map<std::string, double> payload;

  bool operator==(const Event&) const = default;
};

// Log record: {seq, t, kind, track_id, ref_id, payload}.
nlohmann::ordered_json event_to_json(const Event& e, std::uint64_t seq);
Event event_from_json(const nlohmann::json& j, std::uint64_t* seq = nullptr);

}  // namespace msense
