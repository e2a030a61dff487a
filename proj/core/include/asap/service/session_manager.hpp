#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "asap/inference.hpp"
#include "asap/samplers.hpp"
#include "asap/service/event_log.hpp"
#include "asap/types.hpp"

namespace asap::service {

enum class ErrorCode { invalid_argument, not_found, conflict, internal };

std::string_view to_string(ErrorCode code);
int http_status(ErrorCode code);

class ServiceError : public Error {
 public:
  ServiceError(ErrorCode code, const std::string& message)
      : Error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct Condition {
  std::string label;
  std::string url;  // optional stimulus location
};

struct SessionConfig {
  std::vector<Condition> conditions;
  SamplerOptions sampler;  // sampler.seed is ignored; the session seed is used
  ModelConfig model;
};

struct SessionDescriptor {
  std::string id;
  SessionConfig config;
  std::uint64_t seed = 0;
  std::size_t queued = 0;
  std::int64_t created_ms = 0;  // Unix time in milliseconds
  std::int64_t updated_ms = 0;
};

// A pair as shown to the observer: `left` and `right` are condition indices
// in presentation order.
struct ServedPair {
  std::string pair_id;
  std::size_t left = 0;
  std::size_t right = 0;
};

struct NextResult {
  std::optional<ServedPair> pair;  // empty: waiting for outstanding outcomes
  std::size_t outstanding = 0;
};

// Which presented condition the observer preferred.
enum class Choice { first, second };
Choice parse_choice(std::string_view text);

struct OutcomeSummary {
  ComparisonRecord record;  // canonical orientation (first < second)
  std::size_t trials = 0;
  double standard_trials = 0.0;
  std::size_t leader = 0;  // condition with the highest posterior mean
};

struct ScaleEntry {
  std::size_t index = 0;
  double mean = 0.0;
  double variance = 0.0;
  std::size_t rank = 1;  // 1 + number of strictly larger means
};

struct ScaleSnapshot {
  std::vector<ScaleEntry> entries;
  std::size_t trials = 0;
  double standard_trials = 0.0;
};

// Competition ranks by descending mean.
std::vector<std::size_t> ranks_by_mean(const std::vector<double>& means);

class Session;

// Live sessions, one mutex per session. With a log path every state change
// is written to the log before it takes effect, and constructing a manager
// on an existing log rebuilds its sessions by replaying the events.
class SessionManager {
 public:
  explicit SessionManager(std::optional<std::filesystem::path> log_path = {},
                          EpSettings settings = {});
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  // Throws ServiceError(invalid_argument) for fewer than two or duplicate
  // labels. Without a seed one is drawn from the system entropy source.
  SessionDescriptor create(const SessionConfig& config,
                           std::optional<std::uint64_t> seed = {});

  NextResult next(const std::string& session_id);
  OutcomeSummary submit(const std::string& session_id, const std::string& pair_id,
                        Choice choice);
  ScaleSnapshot scale(const std::string& session_id) const;

  SessionDescriptor describe(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;
  std::size_t size() const;

  // Pending queue of a session in canonical orientation (for inspection).
  std::vector<Pair> pending(const std::string& session_id) const;
  std::size_t outstanding(const std::string& session_id) const;

 private:
  std::shared_ptr<Session> find(const std::string& id) const;
  void replay(const std::vector<nlohmann::json>& events);

  EpSettings settings_;
  std::unique_ptr<EventLog> log_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace asap::service
