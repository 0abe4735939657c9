#pragma once

#include <condition_variable>
#include <deque>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace msense {

enum class SinkKind { kStdout, kFile, kCommand };

struct SinkSpec {
  SinkKind kind = SinkKind::kStdout;
  std::string target;  // file path or shell command
};

// Receives alarm notifications as single JSON lines. Throws on failure.
class NotificationSink {
 public:
  virtual ~NotificationSink() = default;
  virtual void deliver(const std::string& json_line) = 0;
};

class StreamSink final : public NotificationSink {
 public:
  explicit StreamSink(std::ostream& os) : os_(os) {}
  void deliver(const std::string& json_line) override;

 private:
  std::ostream& os_;
};

class FileSink final : public NotificationSink {
 public:
  explicit FileSink(std::string path) : path_(std::move(path)) {}
  void deliver(const std::string& json_line) override;

 private:
  std::string path_;
};

// Spawns `command` through the shell per notification and writes the event
// JSON to its standard input. A non-zero exit status is a delivery failure.
class CommandHookSink final : public NotificationSink {
 public:
  explicit CommandHookSink(std::string command) : command_(std::move(command)) {}
  void deliver(const std::string& json_line) override;

 private:
  std::string command_;
};

std::unique_ptr<NotificationSink> make_sink(const SinkSpec& spec);

// Ordered queue drained by one worker thread. Each notification is offered to
// every sink in order, with one retry per sink.
class SinkDispatcher {
 public:
  explicit SinkDispatcher(std::vector<std::unique_ptr<NotificationSink>> sinks);
  ~SinkDispatcher();

  SinkDispatcher(const SinkDispatcher&) = delete;
  SinkDispatcher& operator=(const SinkDispatcher&) = delete;

  void dispatch(std::string json_line);
  // Blocks until everything queued so far has been attempted.
  void flush();

  std::size_t delivered() const;
  std::size_t failed() const;
  std::size_t sink_count() const { return sinks_.size(); }

 private:
  void run();

  std::vector<std::unique_ptr<NotificationSink>> sinks_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<std::string> queue_;
  bool busy_ = false;
  bool stop_ = false;
  std::size_t delivered_ = 0;
  std::size_t failed_ = 0;
  std::thread worker_;
};

}  // namespace msense
