#include "msense/event_log.hpp"

#include <fstream>
#include <istream>

#include "msense/error.hpp"

namespace msense {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::kZoneEntry: return "ZoneEntry";
    case EventKind::kZoneExit: return "ZoneExit";
    case EventKind::kProximityTriggered: return "ProximityTriggered";
    case EventKind::kApproachDetected: return "ApproachDetected";
    case EventKind::kLevelChanged: return "LevelChanged";
  }
  return "Unknown";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) {
  for (auto k : {EventKind::kZoneEntry, EventKind::kZoneExit, EventKind::kProximityTriggered,
                 EventKind::kApproachDetected, EventKind::kLevelChanged}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

nlohmann::ordered_json event_to_json(const Event& e, std::uint64_t seq) {
  nlohmann::ordered_json j;
  j["seq"] = seq;
  j["t"] = e.timestamp;
  j["kind"] = std::string(to_string(e.kind));
  j["track_id"] = e.track_id;
  j["ref_id"] = e.ref_id;
  nlohmann::ordered_json payload = nlohmann::ordered_json::object();
  for (const auto& [k, v] : e.payload) payload[k] = v;
  j["payload"] = std::move(payload);
  return j;
}

Event event_from_json(const nlohmann::json& j, std::uint64_t* seq) {
  Event e;
  auto kind = event_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::kInput, "unknown event kind " + j.at("kind").dump());
  e.kind = *kind;
  e.timestamp = j.at("t").get<double>();
  e.track_id = j.at("track_id").get<std::int64_t>();
  e.ref_id = j.at("ref_id").get<std::string>();
  for (const auto& [k, v] : j.at("payload").items()) e.payload[k] = v.get<double>();
  if (seq) *seq = j.at("seq").get<std::uint64_t>();
  return e;
}

FileLineWriter::FileLineWriter(const std::string& path, bool append)
    : path_(path), out_(path, append ? std::ios::app : std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::kLogWrite, "cannot open " + path);
}

void FileLineWriter::write_line(std::string_view line) {
  out_ << line << '\n';
  if (!out_) throw Error(ErrorCode::kLogWrite, "write failed: " + path_);
}

void FileLineWriter::flush() {
  out_.flush();
  if (!out_) throw Error(ErrorCode::kLogWrite, "flush failed: " + path_);
}

EventLog::EventLog(std::unique_ptr<LineWriter> writer, std::uint64_t first_seq)
    : writer_(std::move(writer)), next_seq_(first_seq) {}

void EventLog::drain() {
  while (!pending_.empty()) {
    writer_->write_line(pending_.front());
    writer_->flush();
    pending_.pop_front();
  }
}

Receipt EventLog::append(const Event& e) {
  if (e.timestamp < last_timestamp_) {
    throw Error(ErrorCode::kOrdering, "event timestamps must be non-decreasing");
  }
  last_timestamp_ = e.timestamp;
  Receipt r{next_seq_++};
  pending_.push_back(event_to_json(e, r.seq).dump());
  try {
    drain();
  } catch (const std::exception&) {
    try {
      drain();
    } catch (const std::exception& retry) {
      throw Error(ErrorCode::kLogWrite,
                  "event " + std::to_string(r.seq) + " not written: " + retry.what());
    }
  }
  return r;
}

std::vector<LoggedEvent> read_event_log(std::istream& is) {
  std::vector<LoggedEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      LoggedEvent le;
      le.event = event_from_json(nlohmann::json::parse(line), &le.seq);
      out.push_back(std::move(le));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::kInput,
                  "event log line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

std::vector<LoggedEvent> read_event_log(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kInput, "cannot open " + path);
  return read_event_log(is);
}

}  // namespace msense
