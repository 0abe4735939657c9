#pragma once

#include <cstdint>
#include <deque>
#include <fstream>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msense/events.hpp"

namespace msense {

// Destination for serialized log lines. Implementations throw on failure.
class LineWriter {
 public:
  virtual ~LineWriter() = default;
  virtual void write_line(std::string_view line) = 0;
  virtual void flush() = 0;
};

class FileLineWriter final : public LineWriter {
 public:
  explicit FileLineWriter(const std::string& path, bool append = false);
  void write_line(std::string_view line) override;
  void flush() override;

 private:
  std::string path_;
  std::ofstream out_;
};

class StringLineWriter final : public LineWriter {
 public:
  void write_line(std::string_view line) override { lines_.emplace_back(line); }
  void flush() override {}
  const std::vector<std::string>& lines() const { return lines_; }

 private:
  std::vector<std::string> lines_;
};

struct Receipt {
  std::uint64_t seq = 0;
};

// Append-only JSON Lines event log. Every append is written and flushed
// before returning. A failed write is retried once; if that also fails the
// event stays queued under its sequence number, the call throws kLogWrite, and
// the next append writes the queued events first, so the log never has a
// sequence gap.
class EventLog {
 public:
  explicit EventLog(std::unique_ptr<LineWriter> writer, std::uint64_t first_seq = 0);

  Receipt append(const Event& e);

  std::size_t pending() const { return pending_.size(); }
  std::uint64_t next_seq() const { return next_seq_; }
  LineWriter& writer() { return *writer_; }

 private:
  void drain();

  std::unique_ptr<LineWriter> writer_;
  std::uint64_t next_seq_;
  double last_timestamp_ = -std::numeric_limits<double>::infinity();
  std::deque<std::string> pending_;
};

struct LoggedEvent {
  std::uint64_t seq = 0;
  Event event;
};

std::vector<LoggedEvent> read_event_log(std::istream& is);
std::vector<LoggedEvent> read_event_log(const std::string& path);

}  // namespace msense
