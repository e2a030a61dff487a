#include "asap/service/http_api.hpp"

#include <stdexcept>

#include <sys/socket.h>

#include <httplib.h>
#include <json.hpp>

namespace asap::service {

namespace {

using json = nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, http_status(code), {{"code", to_string(code)}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw ServiceError(ErrorCode::invalid_argument,
                       std::string("request body is not valid JSON: ") + e.what());
  }
}

SessionConfig config_from_request(const json& body) {
  if (!body.is_object()) {
    throw ServiceError(ErrorCode::invalid_argument, "request body must be an object");
  }
  SessionConfig config;
  const auto conditions = body.find("conditions");
  if (conditions == body.end() || !conditions->is_array()) {
    throw ServiceError(ErrorCode::invalid_argument, "'conditions' must be an array");
  }
  for (const auto& c : *conditions) {
    if (c.is_string()) {
      config.conditions.push_back({c.get<std::string>(), {}});
    } else if (c.is_object() && c.contains("label") && c["label"].is_string()) {
      config.conditions.push_back(
          {c["label"].get<std::string>(), c.value("url", std::string())});
    } else {
      throw ServiceError(ErrorCode::invalid_argument,
                         "each condition must be a label or {label, url}");
    }
  }
  if (const auto s = body.find("sampler"); s != body.end()) {
    if (!s->is_object()) {
      throw ServiceError(ErrorCode::invalid_argument, "'sampler' must be an object");
    }
    try {
      config.sampler.kind = parse_sampler_kind(s->value("kind", std::string("asap")));
    } catch (const std::invalid_argument& e) {
      throw ServiceError(ErrorCode::invalid_argument, e.what());
    }
    config.sampler.selective = s->value("selective", true);
    config.sampler.batch = s->value("batch", true);
  }
  if (body.contains("beta")) config.model.beta = body["beta"].get<double>();
  return config;
}

json pair_json(const SessionDescriptor& d, std::size_t index) {
  const auto& c = d.config.conditions[index];
  json j = {{"index", index}, {"label", c.label}};
  if (!c.url.empty()) j["url"] = c.url;
  return j;
}

json descriptor_json(const SessionDescriptor& d) {
  json conditions = json::array();
  for (std::size_t i = 0; i < d.config.conditions.size(); ++i) {
    conditions.push_back(pair_json(d, i));
  }
  return {{"id", d.id},
          {"conditions", conditions},
          {"sampler",
           {{"kind", to_string(d.config.sampler.kind)},
            {"selective", d.config.sampler.selective},
            {"batch", d.config.sampler.batch}}},
          {"beta", d.config.model.beta},
          {"seed", d.seed},
          {"queued", d.queued},
          {"created_ms", d.created_ms},
          {"updated_ms", d.updated_ms}};
}

// Runs a handler, mapping exceptions onto error responses.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::invalid_argument, e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::internal, e.what());
    }
  };
}

}  // namespace

HttpApi::HttpApi(SessionManager& sessions, HttpOptions options)
    : sessions_(sessions),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {
  // The library default adds SO_REUSEPORT, which lets a second server share
  // a port that is already taken instead of failing to bind.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  install_routes();
}

HttpApi::~HttpApi() { stop(); }

void HttpApi::install_routes() {
  auto& s = *server_;
  auto& sessions = sessions_;

  s.Get("/healthz", guarded([&sessions](const httplib::Request&, httplib::Response& res) {
          send_json(res, 200, {{"status", "ok"}, {"sessions", sessions.size()}});
        }));

  s.Post("/sessions", guarded([&sessions](const httplib::Request& req,
                                          httplib::Response& res) {
           const json body = parse_body(req);
           std::optional<std::uint64_t> seed;
           if (body.is_object() && body.contains("seed")) {
             seed = body["seed"].get<std::uint64_t>();
           }
           const auto d = sessions.create(config_from_request(body), seed);
           send_json(res, 201, descriptor_json(d));
         }));

  s.Get(R"(/sessions/([0-9a-f]+))",
        guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200, descriptor_json(sessions.describe(req.matches[1])));
        }));

  s.Get(R"(/sessions/([0-9a-f]+)/next)",
        guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
          const std::string id = req.matches[1];
          const auto next = sessions.next(id);
          if (!next.pair) {
            send_json(res, 202, {{"status", "awaiting_outcomes"},
                                 {"outstanding", next.outstanding}});
            return;
          }
          const auto d = sessions.describe(id);
          send_json(res, 200, {{"status", "pair"},
                               {"pair_id", next.pair->pair_id},
                               {"first", pair_json(d, next.pair->left)},
                               {"second", pair_json(d, next.pair->right)},
                               {"outstanding", next.outstanding}});
        }));

  s.Post(R"(/sessions/([0-9a-f]+)/outcomes)",
         guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           if (!body.is_object() || !body.contains("pair_id") ||
               !body["pair_id"].is_string() || !body.contains("choice") ||
               !body["choice"].is_string()) {
             throw ServiceError(ErrorCode::invalid_argument,
                                "body must be {pair_id: string, choice: first|second}");
           }
           const auto out =
               sessions.submit(req.matches[1], body["pair_id"].get<std::string>(),
                               parse_choice(body["choice"].get<std::string>()));
           send_json(res, 200, {{"trials", out.trials},
                                {"standard_trials", out.standard_trials},
                                {"record",
                                 {{"first", out.record.first},
                                  {"second", out.record.second},
                                  {"outcome", out.record.outcome}}},
                                {"leader", out.leader}});
         }));

  s.Get(R"(/sessions/([0-9a-f]+)/scale)",
        guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
          const std::string id = req.matches[1];
          const auto d = sessions.describe(id);
          const auto snapshot = sessions.scale(id);
          json conditions = json::array();
          for (const auto& e : snapshot.entries) {
            json j = pair_json(d, e.index);
            j["mean"] = e.mean;
            j["variance"] = e.variance;
            j["rank"] = e.rank;
            conditions.push_back(std::move(j));
          }
          send_json(res, 200, {{"conditions", conditions},
                               {"trials", snapshot.trials},
                               {"standard_trials", snapshot.standard_trials}});
        }));

  if (options_.static_dir) {
    if (!s.set_mount_point("/", options_.static_dir->string())) {
      throw std::runtime_error("static directory not found: " +
                               options_.static_dir->string());
    }
  }

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status == 404 ? ErrorCode::not_found : ErrorCode::internal,
                 "HTTP " + std::to_string(res.status));
    }
  });
}

int HttpApi::bind() {
  if (options_.port == 0) {
    bound_port_ = server_->bind_to_any_port(options_.host);
  } else if (server_->bind_to_port(options_.host, options_.port)) {
    bound_port_ = options_.port;
  } else {
    bound_port_ = -1;
  }
  if (bound_port_ <= 0) {
    throw std::runtime_error("cannot listen on " + options_.host + ":" +
                             std::to_string(options_.port));
  }
  return bound_port_;
}

void HttpApi::listen() {
  if (bound_port_ <= 0) throw std::logic_error("HttpApi::listen before bind");
  server_->listen_after_bind();
}

void HttpApi::stop() {
  if (server_) server_->stop();
}

bool HttpApi::running() const { return server_ && server_->is_running(); }

}  // namespace asap::service
