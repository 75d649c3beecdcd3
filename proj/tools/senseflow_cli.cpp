// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

// senseflow: serve, run-scenario, submit, inspect, validate.
//
// Exit codes: 0 success, 1 validation failure, 2 runtime subscription failure.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "senseflow/engine.hpp"
#include "senseflow/error.hpp"
#include "senseflow/server.hpp"

using namespace senseflow;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

senseflow::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::config_error, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<ClockMode> clock_flag(const std::string& text) {
  if (text.empty()) return std::nullopt;
  auto mode = parse_clock_mode(text);
  if (!mode) throw Error(ErrorCode::config_error, "--clock must be 'simulated' or 'real'");
  return mode;
}

/// Split "http://host:port" into a client.
httplib::Client client_for(const std::string& endpoint) {
  httplib::Client cli(endpoint);
  cli.set_connection_timeout(5);
  cli.set_read_timeout(30);
  return cli;
}

int report_http(const httplib::Result& res) {
  if (!res) {
    std::cerr << "error: endpoint unreachable (" << httplib::to_string(res.error()) << ")\n";
    return kRuntime;
  }
  std::cout << res->body;
  if (res->status >= 200 && res->status < 300) return kOk;
  return res->status >= 500 ? kRuntime : kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"senseflow: sensing-as-a-service middleware"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "senseflow-out", clock, endpoint = "http://127.0.0.1:8080", host = "127.0.0.1";
  std::int64_t duration_ms = -1;
  int port = 8080;

  auto* serve = app.add_subcommand("serve", "Boot from a scenario config and expose the HTTP endpoint");
  serve->add_option("--config", config_path, "Scenario config")->required()->check(CLI::ExistingFile);
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--clock", clock, "simulated|real");
  serve->add_option("--out", out_dir, "Directory for append-file sinks");

  auto* run = app.add_subcommand("run-scenario", "Run a scenario and write delivery files and a report");
  run->add_option("--config", config_path, "Scenario config")->required()->check(CLI::ExistingFile);
  run->add_option("--duration-ms", duration_ms, "Override run_for_ms");
  run->add_option("--clock", clock, "simulated|real");
  run->add_option("--out", out_dir, "Output directory");

  std::string request_path;
  auto* submit = app.add_subcommand("submit", "Submit a request document to a running endpoint");
  submit->add_option("request", request_path, "Request document")->required()->check(CLI::ExistingFile);
  submit->add_option("--endpoint", endpoint, "Service base URL");

  std::string kind;
  auto* inspect = app.add_subcommand("inspect", "List sensors, attributes, plans, operators or subscriptions");
  inspect->add_option("kind", kind, "Listing")->required()->check(
      CLI::IsMember({"sensors", "attributes", "plans", "operators", "subscriptions"}));
  inspect->add_option("--endpoint", endpoint, "Service base URL");
  inspect->add_option("--config", config_path, "Boot offline from this config instead of querying an endpoint")
      ->check(CLI::ExistingFile);

  std::vector<std::string> sdd_files, domain_files, request_files;
  auto* validate = app.add_subcommand("validate", "Validate SDD, domain, request, and scenario files offline");
  validate->add_option("--sdd", sdd_files, "SDD files")->check(CLI::ExistingFile);
  validate->add_option("--domain", domain_files, "Domain files")->check(CLI::ExistingFile);
  validate->add_option("--request", request_files, "Request documents")->check(CLI::ExistingFile);
  validate->add_option("--config", config_path, "Scenario config (boots it)")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  try {
    if (*serve) {
      auto config = load_scenario_config(config_path);
      if (auto mode = clock_flag(clock)) config.clock_mode = *mode;
      config.requests.clear();
      EngineOptions options;
      options.output_directory = out_dir;
      std::filesystem::create_directories(out_dir);
      auto engine = Engine::boot(config, options);
      if (engine->clock_mode() == ClockMode::real) engine->start();
      senseflow::Server server(*engine);
      const int bound = server.bind(host, port);
      if (bound < 0) {
        std::cerr << "error: cannot bind " << host << ":" << port << "\n";
        return kRuntime;
      }
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << host << ":" << bound << " (clock " << to_string(engine->clock_mode())
                << ")" << std::endl;
      server.listen();
      g_server = nullptr;
      engine->shutdown();
      return kOk;
    }

    if (*run) {
      auto config = load_scenario_config(config_path);
      ScenarioOverrides overrides;
      if (duration_ms >= 0) overrides.run_for_ms = duration_ms;
      overrides.clock_mode = clock_flag(clock);
      auto report = run_scenario(config, out_dir, overrides);
      if (!report.error.empty()) std::cerr << "error: " << report.error << "\n";
      for (const auto& s : report.subscriptions) {
        std::cout << s.subscription_id << " " << s.status << " deliveries=" << s.deliveries
                  << " failures=" << s.failures << " checked=" << s.records_checked
                  << " mismatches=" << s.consistency_mismatches << " -> " << s.file.string() << "\n";
      }
      std::cout << "report: " << report.report_file.string() << "\n";
      return report.exit_status;
    }

    if (*submit) {
      auto cli = client_for(endpoint);
      return report_http(cli.Post("/requests", slurp(request_path), "application/json"));
    }

    if (*inspect) {
      if (!config_path.empty()) {
        auto config = load_scenario_config(config_path);
        config.requests.clear();
        auto engine = Engine::boot(config);
        std::cout << engine->inspect(*parse_inspect_kind(kind)).dump(2) << "\n";
        return kOk;
      }
      auto cli = client_for(endpoint);
      return report_http(cli.Get("/inspect/" + kind));
    }

    if (*validate) {
      int status = kOk;
      auto check = [&](const std::string& path, auto&& fn) {
        try {
          fn();
          std::cout << "ok      " << path << "\n";
        } catch (const Error& e) {
          std::cout << "invalid " << path << ": " << to_string(e.code()) << ": " << e.detail() << "\n";
          status = kInvalid;
        }
      };
      for (const auto& f : sdd_files) check(f, [&] { load_sdd_file(f); });
      for (const auto& f : domain_files) check(f, [&] { parse_domain(slurp(f)); });
      for (const auto& f : request_files) check(f, [&] { validate_request(RequestDocument{slurp(f)}); });
      if (!config_path.empty()) {
        check(config_path, [&] {
          auto config = load_scenario_config(config_path);
          for (const auto& r : config.requests) validate_request(RequestDocument{slurp(r.string())});
          config.requests.clear();
          Engine::boot(config);
        });
      }
      return status;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.detail() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
