// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "senseflow/acquisition.hpp"
#include "senseflow/clock.hpp"
#include "senseflow/discoverer.hpp"
#include "senseflow/dissemination.hpp"
#include "senseflow/fusion.hpp"
#include "senseflow/knowledge.hpp"
#include "senseflow/reasoning.hpp"
#include "senseflow/registry.hpp"

namespace senseflow {

enum class ClockMode { real, simulated };

std::string_view to_string(ClockMode mode);
std::optional<ClockMode> parse_clock_mode(std::string_view text);

struct ScenarioEvent {
  std::int64_t at_ms = 0;  ///< relative to the scenario start
  std::string sensor_id;
  Availability availability = Availability::offline;
};

struct ScenarioConfig {
  std::filesystem::path sdd_directory;
  std::vector<std::filesystem::path> sdd_fallback_directories;
  std::filesystem::path fleet_file;
  std::vector<std::filesystem::path> domain_files;
  std::vector<std::filesystem::path> requests;
  std::int64_t run_for_ms = 0;
  ClockMode clock_mode = ClockMode::simulated;
  std::int64_t start_time_ms = 0;
  std::vector<ScenarioEvent> events;
};

/// Parse a scenario config; relative paths resolve against the config's
/// directory. Every referenced file must exist. Throws Error{config_error}.
ScenarioConfig load_scenario_config(const std::filesystem::path& path);
ScenarioConfig parse_scenario_config(std::string_view document, const std::filesystem::path& base_directory);

/// Fleet entries; provided attributes are filled in from the SDDs at
/// registration. Throws Error{config_error}.
std::vector<SensorDescriptor> parse_fleet(std::string_view document);

struct EngineOptions {
  ClockMode clock_mode = ClockMode::simulated;
  std::int64_t start_time_ms = 0;
  std::vector<std::filesystem::path> sdd_directories;
  /// append-file sink targets resolve against this directory.
  std::filesystem::path output_directory = ".";
  /// Remove an append-file target before the first delivery of a fresh
  /// subscription.
  bool truncate_file_sinks = false;
};

struct SubmitResult {
  std::string subscription_id;
  std::string plan_id;
  std::string canonical_key;
  std::size_t sources = 0;
  std::size_t derived = 0;
  bool reused = false;
  std::vector<std::string> outputs;
};

enum class InspectKind { sensors, attributes, plans, operators, subscriptions };

std::optional<InspectKind> parse_inspect_kind(std::string_view text);

/// The running middleware: repositories, registries, compiled discoverers,
/// and subscription dispatch, driven either by a simulated clock
/// (`run_for`) or by real-time worker threads (`start`).
class Engine {
 public:
  explicit Engine(EngineOptions options = {});
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Load SDDs, register the fleet, load domains. Errors name file and field.
  static std::unique_ptr<Engine> boot(const ScenarioConfig& config, EngineOptions options = {});

  void register_fleet_document(std::string_view document, const std::string& origin = "fleet");
  ProviderEntry register_sensor(SensorDescriptor descriptor);
  DomainPlugin load_domain_file(const std::filesystem::path& path);

  /// validate -> plan -> reuse or compile -> subscribe -> dispatch.
  SubmitResult submit(std::string_view request_document);
  void unsubscribe(const std::string& subscription_id);

  void set_availability(const std::string& sensor_id, Availability status);
  void schedule_availability(std::int64_t at_ms, const std::string& sensor_id, Availability status);

  /// Simulated mode: process every event strictly before now + duration,
  /// then set the clock to now + duration. Real mode: sleep.
  void run_for(std::int64_t duration_ms);

  /// Real mode only: start worker threads for discoverers and dispatchers.
  void start();
  void shutdown();

  nlohmann::ordered_json inspect(InspectKind kind) const;
  nlohmann::ordered_json plan_dump(const std::string& plan_id) const;
  /// Drain a stream-endpoint subscription's buffered output.
  std::string drain_stream(const std::string& subscription_id);

  const Clock& clock() const { return *clock_; }
  std::int64_t now_ms() const { return clock_->now_ms(); }
  ClockMode clock_mode() const { return options_.clock_mode; }
  const EngineOptions& options() const { return options_; }

  SddRepository& sdds() { return sdds_; }
  WrapperRepository& wrappers() { return wrappers_; }
  ProviderRegistry& registry() { return registry_; }
  KnowledgeBase& knowledge() { return kb_; }
  OperatorRepository& operators() { return *operators_; }
  DiscovererRepository& discoverers() { return discoverers_; }
  SubscriptionStore& subscriptions() { return subscriptions_; }
  const SubscriptionStore& subscriptions() const { return subscriptions_; }

 private:
  void attach(const std::shared_ptr<Discoverer>& d, const std::string& subscription_id,
              const std::shared_ptr<SubscriptionDispatcher>& dispatcher, bool fresh_discoverer);
  void detach(const std::string& subscription_id);
  void apply_due_events(std::int64_t now);
  void spawn_discoverer_worker(const std::shared_ptr<Discoverer>& d);
  void spawn_dispatch_worker(const std::string& subscription_id,
                             const std::shared_ptr<SubscriptionDispatcher>& dispatcher);

  EngineOptions options_;
  std::unique_ptr<Clock> clock_;
  SimulatedClock* sim_clock_ = nullptr;

  SddRepository sdds_;
  WrapperRepository wrappers_;
  ProviderRegistry registry_;
  KnowledgeBase kb_;
  std::unique_ptr<OperatorRepository> operators_;
  DiscovererRepository discoverers_;
  SubscriptionStore subscriptions_;

  mutable std::recursive_mutex mutex_;
  std::map<std::string, std::int64_t> next_tick_;                 // plan id -> next tick (simulated)
  std::map<std::string, std::shared_ptr<Discoverer>> bound_;      // subscription id -> discoverer
  std::multimap<std::int64_t, std::pair<std::string, Availability>> events_;
  std::uint64_t next_request_ = 1;

  std::atomic<bool> running_{false};
  std::atomic<bool> stopping_{false};
  std::mutex worker_mutex_;
  std::condition_variable worker_cv_;
  std::vector<std::thread> workers_;
  std::map<std::string, bool> discoverer_workers_;
};

struct SubscriptionReport {
  std::string subscription_id;
  std::string user_id;
  std::string plan_id;
  std::string status;
  std::size_t deliveries = 0;
  std::size_t failures = 0;
  std::filesystem::path file;
  std::vector<std::string> sample;
  std::size_t records_checked = 0;
  std::size_t consistency_mismatches = 0;
};

struct ScenarioReport {
  int exit_status = 0;
  std::string error;
  std::vector<SubscriptionReport> subscriptions;
  std::filesystem::path report_file;
  std::filesystem::path plans_file;
};

struct ScenarioOverrides {
  std::optional<std::int64_t> run_for_ms;
  std::optional<ClockMode> clock_mode;
};

/// Boot, submit every request, run, and write delivery files, plan dumps,
/// and report.json into `out_directory`. Exit status: 0 ok, 1 validation
/// failure, 2 a subscription ended degraded.
ScenarioReport run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_directory,
                            const ScenarioOverrides& overrides = {});

}  // namespace senseflow
