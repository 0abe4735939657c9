#include "msense/sinks.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sys/wait.h>

#include "msense/error.hpp"

namespace msense {

void StreamSink::deliver(const std::string& json_line) {
  os_ << json_line << '\n';
  os_.flush();
  if (!os_) throw Error(ErrorCode::kLogWrite, "stream sink write failed");
}

void FileSink::deliver(const std::string& json_line) {
  std::ofstream os(path_, std::ios::app);
  os << json_line << '\n';
  os.flush();
  if (!os) throw Error(ErrorCode::kLogWrite, "file sink write failed: " + path_);
}

void CommandHookSink::deliver(const std::string& json_line) {
  FILE* pipe = ::popen(command_.c_str(), "w");
  if (!pipe) throw Error(ErrorCode::kLogWrite, "cannot spawn hook: " + command_);
  std::string payload = json_line + "\n";
  std::size_t written = std::fwrite(payload.data(), 1, payload.size(), pipe);
  int status = ::pclose(pipe);
  if (written != payload.size() || status == -1 || !WIFEXITED(status) ||
      WEXITSTATUS(status) != 0) {
    throw Error(ErrorCode::kLogWrite, "hook failed: " + command_);
  }
}

std::unique_ptr<NotificationSink> make_sink(const SinkSpec& spec) {
  switch (spec.kind) {
    case SinkKind::kStdout: return std::make_unique<StreamSink>(std::cout);
    case SinkKind::kFile: return std::make_unique<FileSink>(spec.target);
    case SinkKind::kCommand: return std::make_unique<CommandHookSink>(spec.target);
  }
  return nullptr;
}

SinkDispatcher::SinkDispatcher(std::vector<std::unique_ptr<NotificationSink>> sinks)
    : sinks_(std::move(sinks)) {
  worker_ = std::thread([this] { run(); });
}

SinkDispatcher::~SinkDispatcher() {
  {
    std::lock_guard lk(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void SinkDispatcher::dispatch(std::string json_line) {
  {
    std::lock_guard lk(mu_);
    queue_.push_back(std::move(json_line));
  }
  cv_.notify_one();
}

void SinkDispatcher::flush() {
  std::unique_lock lk(mu_);
  idle_cv_.wait(lk, [this] { return queue_.empty() && !busy_; });
}

std::size_t SinkDispatcher::delivered() const {
  std::lock_guard lk(mu_);
  return delivered_;
}

std::size_t SinkDispatcher::failed() const {
  std::lock_guard lk(mu_);
  return failed_;
}

void SinkDispatcher::run() {
  for (;;) {
    std::string line;
    {
      std::unique_lock lk(mu_);
      cv_.wait(lk, [this] { return stop_ || !queue_.empty(); });
      if (queue_.empty()) return;  // stopping and drained
      line = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
    }
    std::size_t ok = 0, bad = 0;
    for (auto& sink : sinks_) {
      bool done = false;
      for (int attempt = 0; attempt < 2 && !done; ++attempt) {
        try {
          sink->deliver(line);
          done = true;
        } catch (const std::exception& e) {
          if (attempt == 1) std::cerr << "sink delivery failed: " << e.what() << '\n';
        }
      }
      (done ? ok : bad) += 1;
    }
    {
      std::lock_guard lk(mu_);
      delivered_ += ok;
      failed_ += bad;
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

}  // namespace msense
