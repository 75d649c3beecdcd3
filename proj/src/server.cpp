// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "senseflow/server.hpp"

#include <charconv>

#include "httplib.h"
#include "json.hpp"
#include "senseflow/error.hpp"

namespace senseflow {

namespace {

using ordered = nlohmann::ordered_json;

void reply_json(httplib::Response& res, int status, const ordered& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void reply_error(httplib::Response& res, const Error& e) {
  reply_json(res, http_status(e.code()), {{"error", std::string(to_string(e.code()))}, {"detail", e.detail()}});
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      reply_error(res, e);
    } catch (const std::exception& e) {
      reply_json(res, 500, {{"error", "internal"}, {"detail", e.what()}});
    }
  };
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_subscription:
    case ErrorCode::unknown_provider:
      return 404;
    case ErrorCode::state_violation:
      return 409;
    case ErrorCode::unsatisfiable_attribute:
    case ErrorCode::unknown_attribute:
      return 422;
    case ErrorCode::sink_unavailable:
    case ErrorCode::wrapper_unavailable:
    case ErrorCode::sensor_fault:
      return 503;
    default:
      return 400;
  }
}

struct Server::Impl {
  explicit Impl(Engine& e) : engine(e) {}
  Engine& engine;
  httplib::Server http;
};

Server::Server(Engine& engine) : impl_(std::make_unique<Impl>(engine)) {
  auto& http = impl_->http;
  Engine& eng = engine;

  http.Get("/health", guarded([&eng](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, {{"status", "ok"}, {"clock", std::string(to_string(eng.clock_mode()))}, {"now_ms", eng.now_ms()}});
  }));

  http.Post("/requests", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
    auto r = eng.submit(req.body);
    ordered body;
    body["subscription_id"] = r.subscription_id;
    body["plan_id"] = r.plan_id;
    body["reused"] = r.reused;
    body["plan_summary"] = {{"sources", r.sources}, {"derived", r.derived}, {"outputs", r.outputs}};
    reply_json(res, 201, body);
  }));

  http.Get(R"(/inspect/([a-z]+))", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
    auto kind = parse_inspect_kind(req.matches[1].str());
    if (!kind) {
      reply_json(res, 404, {{"error", "unknown_listing"}, {"detail", req.matches[1].str()}});
      return;
    }
    reply_json(res, 200, eng.inspect(*kind));
  }));

  http.Get(R"(/plans/([A-Za-z0-9_-]+))", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
    reply_json(res, 200, eng.plan_dump(req.matches[1].str()));
  }));

  http.Get(R"(/subscriptions/([A-Za-z0-9_-]+))", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.matches[1].str();
    auto sub = eng.subscriptions().get(id, eng.now_ms());
    if (!sub) throw Error(ErrorCode::unknown_subscription, id);
    reply_json(res, 200,
               {{"subscription_id", sub->subscription_id},
                {"plan_id", sub->plan_id},
                {"status", std::string(to_string(sub->status))},
                {"deliveries", sub->deliveries},
                {"failures", sub->failures}});
  }));

  http.Get(R"(/subscriptions/([A-Za-z0-9_-]+)/deliveries)",
           guarded([&eng](const httplib::Request& req, httplib::Response& res) {
             auto sub = eng.subscriptions().get(req.matches[1].str());
             auto text = eng.drain_stream(req.matches[1].str());
             res.status = 200;
             res.set_content(text, sub && sub->output_format == OutputFormat::csv ? "text/csv"
                                                                                  : "application/x-ndjson");
           }));

  http.Delete(R"(/subscriptions/([A-Za-z0-9_-]+))", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
    eng.unsubscribe(req.matches[1].str());
    reply_json(res, 200, {{"subscription_id", req.matches[1].str()}, {"status", "cancelled"}});
  }));

  http.Post(R"(/sensors/([A-Za-z0-9_.-]+)/availability)",
            guarded([&eng](const httplib::Request& req, httplib::Response& res) {
              auto body = nlohmann::json::parse(req.body, nullptr, false);
              std::string status = body.is_object() ? body.value("availability", std::string()) : std::string();
              Availability a;
              if (status == "online") a = Availability::online;
              else if (status == "offline") a = Availability::offline;
              else throw Error(ErrorCode::schema_violation, "availability must be 'online' or 'offline'");
              eng.set_availability(req.matches[1].str(), a);
              reply_json(res, 200, {{"sensor_id", req.matches[1].str()}, {"availability", status}});
            }));

  http.Post("/advance", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
    if (eng.clock_mode() != ClockMode::simulated) {
      throw Error(ErrorCode::state_violation, "advance requires the simulated clock");
    }
    std::int64_t ms = 0;
    const auto text = req.get_param_value("ms");
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), ms);
    if (ec != std::errc() || p != text.data() + text.size() || ms < 0) {
      throw Error(ErrorCode::invalid_interval, "ms must be a non-negative integer");
    }
    eng.run_for(ms);
    reply_json(res, 200, {{"now_ms", eng.now_ms()}});
  }));
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

void Server::listen() { impl_->http.listen_after_bind(); }

void Server::stop() { impl_->http.stop(); }

}  // namespace senseflow
