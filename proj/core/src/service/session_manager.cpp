#include "asap/service/session_manager.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <set>

#include "asap/gaussian.hpp"

namespace asap::service {

namespace {

using json = nlohmann::json;

constexpr std::uint64_t kSamplerStream = 1;
constexpr std::uint64_t kPairIdStream = 7;
constexpr std::uint64_t kPresentationStream = 8;

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

json config_json(const SessionConfig& c) {
  json conditions = json::array();
  for (const auto& cond : c.conditions) {
    conditions.push_back({{"label", cond.label}, {"url", cond.url}});
  }
  return {{"conditions", conditions},
          {"sampler",
           {{"kind", to_string(c.sampler.kind)},
            {"selective", c.sampler.selective},
            {"batch", c.sampler.batch}}},
          {"model",
           {{"beta", c.model.beta},
            {"prior_mean", c.model.prior_mean},
            {"prior_variance", c.model.prior_variance}}}};
}

SessionConfig config_from_json(const json& j) {
  SessionConfig c;
  for (const auto& cond : j.at("conditions")) {
    c.conditions.push_back({cond.at("label").get<std::string>(),
                            cond.value("url", std::string())});
  }
  const auto& s = j.at("sampler");
  c.sampler.kind = parse_sampler_kind(s.at("kind").get<std::string>());
  c.sampler.selective = s.at("selective").get<bool>();
  c.sampler.batch = s.at("batch").get<bool>();
  const auto& m = j.at("model");
  c.model.beta = m.at("beta").get<double>();
  c.model.prior_mean = m.at("prior_mean").get<double>();
  c.model.prior_variance = m.at("prior_variance").get<double>();
  return c;
}

void validate_config(const SessionConfig& config) {
  if (config.conditions.size() < 2) {
    throw ServiceError(ErrorCode::invalid_argument, "a session needs at least 2 conditions");
  }
  std::set<std::string> seen;
  for (const auto& c : config.conditions) {
    if (c.label.empty()) {
      throw ServiceError(ErrorCode::invalid_argument, "condition labels must be non-empty");
    }
    if (!seen.insert(c.label).second) {
      throw ServiceError(ErrorCode::invalid_argument, "duplicate label '" + c.label + "'");
    }
  }
  try {
    config.model.validate();
  } catch (const std::exception& e) {
    throw ServiceError(ErrorCode::invalid_argument, e.what());
  }
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::internal: return "internal";
  }
  return "internal";
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::internal: return 500;
  }
  return 500;
}

Choice parse_choice(std::string_view text) {
  if (text == "first") return Choice::first;
  if (text == "second") return Choice::second;
  throw ServiceError(ErrorCode::invalid_argument,
                     "choice must be 'first' or 'second', got '" + std::string(text) + "'");
}

std::vector<std::size_t> ranks_by_mean(const std::vector<double>& means) {
  std::vector<std::size_t> rank(means.size(), 1);
  for (std::size_t i = 0; i < means.size(); ++i) {
    for (double m : means) {
      if (m > means[i]) ++rank[i];
    }
  }
  return rank;
}

class Session {
 public:
  Session(std::string id, SessionConfig config, std::uint64_t seed,
          const EpSettings& settings, std::int64_t created)
      : id_(std::move(id)),
        config_(std::move(config)),
        seed_(seed),
        state_(config_.conditions.size(), config_.model),
        tracker_(config_.conditions.size(), config_.model, settings),
        created_ms_(created),
        updated_ms_(created) {
    SamplerOptions options = config_.sampler;
    options.seed = derive_seed(seed_, 0, kSamplerStream);
    sampler_ = make_sampler(options, settings);
    refill();
  }

  std::mutex& mutex() { return mutex_; }

  SessionDescriptor describe() const {
    return {id_, config_, seed_, queue_.size(), created_ms_, updated_ms_};
  }

  // The pair the next serve would hand out, without committing it.
  std::optional<ServedPair> peek() {
    refill();
    if (queue_.empty()) return std::nullopt;
    const Pair p = queue_.front();
    const bool swap = derive_seed(seed_, serves_, kPresentationStream) & 1u;
    return ServedPair{hex64(derive_seed(seed_, serves_, kPairIdStream)),
                      swap ? p.second : p.first, swap ? p.first : p.second};
  }

  void commit_serve(const ServedPair& served, std::int64_t time) {
    const Pair p = queue_.front();
    queue_.pop_front();
    outstanding_.emplace(served.pair_id, Outstanding{p, served.left != p.first});
    ++serves_;
    updated_ms_ = time;
  }

  // Canonical record for an answer to an outstanding pair.
  ComparisonRecord resolve(const std::string& pair_id, Choice choice) const {
    const auto it = outstanding_.find(pair_id);
    if (it == outstanding_.end()) {
      throw ServiceError(ErrorCode::conflict,
                         "pair '" + pair_id + "' was not served or is already answered");
    }
    const Pair p = it->second.pair;
    const bool left_won = choice == Choice::first;
    // The left condition is p.first unless presentation was swapped.
    const bool first_won = left_won != it->second.swapped;
    return {state_.num_comparisons(), p.first, p.second,
            first_won ? kFirstPreferred : kSecondPreferred};
  }

  OutcomeSummary commit_outcome(const std::string& pair_id, const ComparisonRecord& r,
                                std::int64_t time) {
    outstanding_.erase(pair_id);
    const ComparisonRecord& rec = state_.append(r.first, r.second, r.outcome);
    sampler_->observe(std::span<const ComparisonRecord>(&rec, 1));
    if (sampler_->policy() == PosteriorPolicy::online) {
      state_.set_posterior(online_update(state_.posterior(), rec, config_.model));
    } else {
      tracker_.refresh(state_);
    }
    updated_ms_ = time;

    OutcomeSummary out;
    out.record = rec;
    out.trials = state_.num_comparisons();
    out.standard_trials = state_.standard_trials();
    const auto means = state_.posterior().means();
    out.leader = static_cast<std::size_t>(
        std::max_element(means.begin(), means.end()) - means.begin());
    return out;
  }

  ScaleSnapshot scale() const {
    ScaleSnapshot s;
    s.trials = state_.num_comparisons();
    s.standard_trials = state_.standard_trials();
    const auto means = state_.posterior().means();
    const auto ranks = ranks_by_mean(means);
    for (std::size_t i = 0; i < means.size(); ++i) {
      s.entries.push_back({i, means[i], state_.posterior()[i].variance, ranks[i]});
    }
    return s;
  }

  std::vector<Pair> pending() const { return {queue_.begin(), queue_.end()}; }
  std::size_t outstanding() const { return outstanding_.size(); }

 private:
  struct Outstanding {
    Pair pair;
    bool swapped = false;
  };

  // A new selection happens only once every served pair is answered, so the
  // sampler always sees a posterior that reflects all delivered outcomes.
  void refill() {
    if (!queue_.empty() || !outstanding_.empty()) return;
    FactorGraph* graph =
        sampler_->policy() == PosteriorPolicy::full ? &tracker_.graph() : nullptr;
    const Batch batch = sampler_->select(state_, graph);
    for (const Pair& p : batch) {
      if (p.first == p.second) throw std::logic_error("sampler produced a self-pair");
      queue_.push_back(Pair::canonical(p.first, p.second));
    }
  }

  std::mutex mutex_;
  std::string id_;
  SessionConfig config_;
  std::uint64_t seed_;
  ExperimentState state_;
  PosteriorTracker tracker_;
  std::unique_ptr<Sampler> sampler_;
  std::deque<Pair> queue_;
  std::map<std::string, Outstanding> outstanding_;
  std::uint64_t serves_ = 0;
  std::int64_t created_ms_;
  std::int64_t updated_ms_;
};

SessionManager::SessionManager(std::optional<std::filesystem::path> log_path,
                               EpSettings settings)
    : settings_(settings) {
  settings_.validate();
  if (log_path) {
    replay(EventLog::read(*log_path));
    log_ = std::make_unique<EventLog>(*log_path);
  }
}

SessionManager::~SessionManager() = default;

void SessionManager::replay(const std::vector<json>& events) {
  std::size_t index = 0;
  for (const auto& e : events) {
    ++index;
    const auto where = "event " + std::to_string(index) + ": ";
    try {
      const std::string type = e.at("event").get<std::string>();
      const std::string id = e.at("session").get<std::string>();
      const std::int64_t time = e.value("time", std::int64_t{0});
      if (type == "create") {
        SessionConfig config = config_from_json(e.at("config"));
        validate_config(config);
        sessions_[id] = std::make_shared<Session>(
            id, std::move(config), e.at("seed").get<std::uint64_t>(), settings_, time);
        continue;
      }
      const auto session = find(id);
      if (type == "serve") {
        const auto served = session->peek();
        if (!served || served->pair_id != e.at("pair_id").get<std::string>() ||
            served->left != e.at("left").get<std::size_t>() ||
            served->right != e.at("right").get<std::size_t>()) {
          throw ValidationError("replayed serve does not match the log");
        }
        session->commit_serve(*served, time);
      } else if (type == "outcome") {
        const std::string pair_id = e.at("pair_id").get<std::string>();
        const auto record =
            session->resolve(pair_id, parse_choice(e.at("choice").get<std::string>()));
        if (record.first != e.at("first").get<std::size_t>() ||
            record.second != e.at("second").get<std::size_t>() ||
            record.outcome != e.at("outcome").get<int>()) {
          throw ValidationError("replayed outcome does not match the log");
        }
        session->commit_outcome(pair_id, record, time);
      } else {
        throw ValidationError("unknown event type '" + type + "'");
      }
    } catch (const std::exception& ex) {
      throw ValidationError("event log replay failed at " + where + ex.what());
    }
  }
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    throw ServiceError(ErrorCode::not_found, "unknown session '" + id + "'");
  }
  return it->second;
}

SessionDescriptor SessionManager::create(const SessionConfig& config,
                                         std::optional<std::uint64_t> seed) {
  validate_config(config);
  std::random_device entropy;
  auto draw64 = [&] {
    return (static_cast<std::uint64_t>(entropy()) << 32) ^ entropy();
  };
  const std::uint64_t session_seed = seed ? *seed : draw64();
  const std::int64_t time = now_ms();

  std::unique_lock lock(sessions_mutex_);
  std::string id;
  do {
    id = hex64(draw64());
  } while (sessions_.count(id) != 0);
  auto session = std::make_shared<Session>(id, config, session_seed, settings_, time);
  if (log_) {
    log_->append({{"event", "create"},
                  {"session", id},
                  {"time", time},
                  {"seed", session_seed},
                  {"config", config_json(config)}});
  }
  sessions_.emplace(id, session);
  return session->describe();
}

NextResult SessionManager::next(const std::string& session_id) {
  const auto session = find(session_id);
  std::lock_guard lock(session->mutex());
  NextResult result;
  const auto served = session->peek();
  if (served) {
    const std::int64_t time = now_ms();
    if (log_) {
      log_->append({{"event", "serve"},
                    {"session", session_id},
                    {"time", time},
                    {"pair_id", served->pair_id},
                    {"left", served->left},
                    {"right", served->right}});
    }
    session->commit_serve(*served, time);
    result.pair = served;
  }
  result.outstanding = session->outstanding();
  return result;
}

OutcomeSummary SessionManager::submit(const std::string& session_id,
                                      const std::string& pair_id, Choice choice) {
  const auto session = find(session_id);
  std::lock_guard lock(session->mutex());
  const ComparisonRecord record = session->resolve(pair_id, choice);
  const std::int64_t time = now_ms();
  if (log_) {
    log_->append({{"event", "outcome"},
                  {"session", session_id},
                  {"time", time},
                  {"pair_id", pair_id},
                  {"choice", choice == Choice::first ? "first" : "second"},
                  {"first", record.first},
                  {"second", record.second},
                  {"outcome", record.outcome}});
  }
  return session->commit_outcome(pair_id, record, time);
}

ScaleSnapshot SessionManager::scale(const std::string& session_id) const {
  const auto session = find(session_id);
  std::lock_guard lock(session->mutex());
  return session->scale();
}

SessionDescriptor SessionManager::describe(const std::string& session_id) const {
  const auto session = find(session_id);
  std::lock_guard lock(session->mutex());
  return session->describe();
}

std::vector<std::string> SessionManager::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return ids;
}

std::size_t SessionManager::size() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

std::vector<Pair> SessionManager::pending(const std::string& session_id) const {
  const auto session = find(session_id);
  std::lock_guard lock(session->mutex());
  return session->pending();
}

std::size_t SessionManager::outstanding(const std::string& session_id) const {
  const auto session = find(session_id);
  std::lock_guard lock(session->mutex());
  return session->outstanding();
}

}  // namespace asap::service
