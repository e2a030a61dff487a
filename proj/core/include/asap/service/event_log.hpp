#pragma once

#include <cstdio>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace asap::service {

// Append-only JSON-lines file. Every append is flushed and synced before it
// returns. Opening a log drops a torn final line left by a crash.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  void append(const nlohmann::json& event);
  const std::filesystem::path& path() const { return path_; }

  // Events in file order. A final line without a terminating newline is a
  // torn write and is ignored; any other malformed line throws.
  static std::vector<nlohmann::json> read(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  std::mutex mutex_;
};

}  // namespace asap::service
