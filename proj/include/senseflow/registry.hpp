// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "senseflow/acquisition.hpp"
#include "senseflow/attribute.hpp"

namespace senseflow {

class KnowledgeBase;

enum class Availability { online, offline };

std::string_view to_string(Availability a);

struct Location {
  double latitude = 0.0;
  double longitude = 0.0;
  std::string label;
};

struct SensorDescriptor {
  std::string sensor_id;
  std::string model_id;
  Location location;
  Availability availability = Availability::online;
  int cost_rank = 0;
  /// Inherited from the model's SDD.
  std::vector<ContextAttribute> provided_attributes;
  /// Per-sensor driver parameter overrides (e.g. a distinct noise seed).
  ParamMap driver_overrides;

  bool provides(std::string_view attribute) const;
};

/// Throws Error{invalid_descriptor} when an invariant does not hold.
void validate_descriptor(const SensorDescriptor& descriptor);

/// Opaque, stable provider key.
struct ProviderId {
  std::uint64_t value = 0;

  friend auto operator<=>(const ProviderId&, const ProviderId&) = default;
};

std::string to_string(ProviderId id);

struct ProviderEntry {
  ProviderId provider_id;
  SensorDescriptor descriptor;
  std::int64_t registered_at_ms = 0;
};

struct ProviderConstraints {
  std::optional<std::string> location_label;
  std::optional<int> max_cost_rank;
};

struct AttributeCatalogEntry {
  ContextAttribute attribute;
  std::size_t provider_count = 0;
  bool derivable = false;
};

/// Context provider registry: which sensors exist, what they provide, and
/// whether they are available. Lookups are concurrent; mutations are
/// serialized and become visible atomically.
class ProviderRegistry {
 public:
  ProviderRegistry() = default;
  ProviderRegistry(const ProviderRegistry&) = delete;
  ProviderRegistry& operator=(const ProviderRegistry&) = delete;

  /// Throws Error{duplicate_sensor_id}, Error{invalid_descriptor}.
  ProviderEntry register_provider(SensorDescriptor descriptor, std::int64_t now_ms = 0);

  /// Online providers listing `attribute` that satisfy `constraints`,
  /// ordered by (cost_rank, sensor_id).
  std::vector<ProviderEntry> find_providers(std::string_view attribute,
                                            const ProviderConstraints& constraints = {}) const;

  /// Throws Error{unknown_provider}.
  ProviderEntry set_availability(ProviderId id, Availability status);

  std::optional<ProviderEntry> get(ProviderId id) const;
  std::optional<ProviderEntry> find_by_sensor(std::string_view sensor_id) const;
  bool is_online(ProviderId id) const;
  /// True when any registered provider (online or not) lists the attribute.
  bool mentions(std::string_view attribute) const;

  std::vector<ProviderEntry> entries() const;
  std::size_t size() const;

  /// Attributes provided by at least one registered sensor, with online
  /// provider counts.
  std::vector<AttributeCatalogEntry> catalog() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<ProviderId, ProviderEntry> entries_;
  std::map<std::string, ProviderId, std::less<>> by_sensor_;
  std::uint64_t next_id_ = 1;
};

/// Attributes that are directly provided by an online sensor or derivable
/// through rules whose dependencies are (transitively) capturable, sorted by
/// attribute name.
std::vector<AttributeCatalogEntry> capturable_attributes(const ProviderRegistry& registry,
                                                         const KnowledgeBase& kb);

}  // namespace senseflow
