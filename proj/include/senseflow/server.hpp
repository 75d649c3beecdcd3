// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "senseflow/engine.hpp"
#include "senseflow/error.hpp"

namespace senseflow {

/// HTTP front door over an Engine.
///
///   GET    /health
///   POST   /requests                      body: request document
///   GET    /inspect/{kind}
///   GET    /plans/{plan_id}
///   GET    /subscriptions/{id}
///   GET    /subscriptions/{id}/deliveries  drains a stream-endpoint sink
///   DELETE /subscriptions/{id}
///   POST   /sensors/{id}/availability      body: {"availability": "online"|"offline"}
///   POST   /advance?ms=N                   simulated clock only
class Server {
 public:
  explicit Server(Engine& engine);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Bind; port 0 picks a free one. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP status for an error code.
int http_status(ErrorCode code);

}  // namespace senseflow
