// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "senseflow/acquisition.hpp"
#include "senseflow/clock.hpp"
#include "senseflow/fusion.hpp"
#include "senseflow/reasoning.hpp"
#include "senseflow/record.hpp"
#include "senseflow/registry.hpp"

namespace senseflow {

enum class DiscovererState { created, running, stopped };

std::string_view to_string(DiscovererState state);

using RecordListener = std::function<void(const DataRecord&)>;

/// A compiled, executable acquisition plan.
///
/// Each tick pulls every source that is due (latest value per source wins),
/// evaluates derive nodes in a fixed topological order, and hands the
/// assembled record to every listener in emission order. Ticks are
/// serialized; one discoverer is a single logical execution loop.
class Discoverer {
 public:
  const PlanSpec& plan() const { return plan_; }
  const std::string& plan_id() const { return plan_.plan_id; }
  const std::string& canonical_key() const { return plan_.canonical_key; }
  std::int64_t tick_interval_ms() const { return tick_interval_ms_; }
  const std::vector<std::size_t>& evaluation_order() const { return order_; }

  DiscovererState state() const;
  std::size_t subscriber_count() const;
  std::size_t ticks() const { return ticks_.load(); }

  /// created|stopped -> running.
  void start();
  /// Idempotent. Releases sensor wrappers; a later start re-resolves nothing
  /// and resumes with fresh driver state.
  void stop();

  /// Throws Error{state_violation} unless running.
  DataRecord tick(const Clock& clock);

  std::size_t add_subscriber();
  /// Stops the discoverer when the count reaches zero.
  std::size_t remove_subscriber();

  /// Listener ids are caller-chosen (subscription ids).
  void add_listener(const std::string& id, RecordListener listener);
  void remove_listener(const std::string& id);

  std::optional<DataRecord> latest() const;

 private:
  friend std::shared_ptr<Discoverer> compile(const PlanSpec&, const ProviderRegistry&, WrapperRepository&,
                                             const SddRepository&, const OperatorRepository&);

  struct SourceSlot {
    SourceNode node;
    std::unique_ptr<SensorWrapper> prototype;
    std::unique_ptr<SensorWrapper> wrapper;
    std::int64_t sampling_interval_ms = 1000;
    std::optional<std::int64_t> last_pull_ms;
    std::map<std::string, Value, std::less<>> held;
  };

  Discoverer(PlanSpec plan, const ProviderRegistry& registry, const OperatorRepository& operators);

  PlanSpec plan_;
  const ProviderRegistry& registry_;
  const OperatorRepository& operators_;
  std::vector<std::size_t> order_;
  std::map<std::size_t, SourceSlot> sources_;
  std::int64_t tick_interval_ms_ = 1000;

  std::mutex tick_mutex_;
  mutable std::mutex mutex_;
  DiscovererState state_ = DiscovererState::created;
  std::size_t subscribers_ = 0;
  std::optional<DataRecord> latest_;
  std::map<std::string, RecordListener> listeners_;
  std::atomic<std::size_t> ticks_{0};
};

/// Throws Error{wrapper_unavailable} when a source cannot be resolved.
std::shared_ptr<Discoverer> compile(const PlanSpec& plan, const ProviderRegistry& registry,
                                    WrapperRepository& wrappers, const SddRepository& sdds,
                                    const OperatorRepository& operators);

/// Previously compiled discoverers by canonical key.
class DiscovererRepository {
 public:
  /// Exact-key lookup. On a hit the subscriber count is incremented (and a
  /// stopped discoverer restarted); a miss returns nullptr.
  std::shared_ptr<Discoverer> lookup_or_register(const std::string& key);

  /// Stores a freshly compiled discoverer with one subscriber and starts it.
  void insert(std::shared_ptr<Discoverer> discoverer);

  std::shared_ptr<Discoverer> find_by_plan(const std::string& plan_id) const;
  std::vector<std::shared_ptr<Discoverer>> list() const;
  std::size_t compilations() const { return compilations_.load(); }

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Discoverer>> by_key_;
  std::atomic<std::size_t> compilations_{0};
};

/// Evaluate the plan's derive nodes offline from a record's measured
/// values; used to check self-consistency of emitted records.
std::map<std::string, Value> reevaluate(const PlanSpec& plan,
                                        const std::map<std::string, Value>& measured);

}  // namespace senseflow
