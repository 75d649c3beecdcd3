// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "senseflow/registry.hpp"

#include <algorithm>
#include <cstdio>
#include <mutex>
#include <set>

#include "senseflow/error.hpp"
#include "senseflow/knowledge.hpp"

namespace senseflow {

std::string_view to_string(Availability a) { return a == Availability::online ? "online" : "offline"; }

bool SensorDescriptor::provides(std::string_view attribute) const {
  return std::any_of(provided_attributes.begin(), provided_attributes.end(),
                     [&](const ContextAttribute& a) { return a.name == attribute; });
}

void validate_descriptor(const SensorDescriptor& d) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::invalid_descriptor, "sensor '" + d.sensor_id + "': " + why);
  };
  if (d.sensor_id.empty()) fail("sensor_id must be non-empty");
  if (d.model_id.empty()) fail("model_id must be non-empty");
  if (!(d.location.latitude >= -90.0 && d.location.latitude <= 90.0)) fail("latitude out of range");
  if (!(d.location.longitude >= -180.0 && d.location.longitude <= 180.0)) fail("longitude out of range");
  if (d.provided_attributes.empty()) fail("no provided attributes");
}

std::string to_string(ProviderId id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "prov-%04llu", static_cast<unsigned long long>(id.value));
  return buf;
}

ProviderEntry ProviderRegistry::register_provider(SensorDescriptor descriptor, std::int64_t now_ms) {
  validate_descriptor(descriptor);
  std::unique_lock lock(mutex_);
  if (by_sensor_.count(descriptor.sensor_id)) {
    throw Error(ErrorCode::duplicate_sensor_id, descriptor.sensor_id);
  }
  ProviderEntry entry{ProviderId{next_id_++}, std::move(descriptor), now_ms};
  by_sensor_[entry.descriptor.sensor_id] = entry.provider_id;
  entries_[entry.provider_id] = entry;
  return entry;
}

std::vector<ProviderEntry> ProviderRegistry::find_providers(std::string_view attribute,
                                                            const ProviderConstraints& constraints) const {
  std::vector<ProviderEntry> out;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [id, e] : entries_) {
      const auto& d = e.descriptor;
      if (d.availability != Availability::online || !d.provides(attribute)) continue;
      if (constraints.location_label && d.location.label != *constraints.location_label) continue;
      if (constraints.max_cost_rank && d.cost_rank > *constraints.max_cost_rank) continue;
      out.push_back(e);
    }
  }
  std::sort(out.begin(), out.end(), [](const ProviderEntry& a, const ProviderEntry& b) {
    if (a.descriptor.cost_rank != b.descriptor.cost_rank) return a.descriptor.cost_rank < b.descriptor.cost_rank;
    return a.descriptor.sensor_id < b.descriptor.sensor_id;
  });
  return out;
}

ProviderEntry ProviderRegistry::set_availability(ProviderId id, Availability status) {
  std::unique_lock lock(mutex_);
  auto it = entries_.find(id);
  if (it == entries_.end()) throw Error(ErrorCode::unknown_provider, to_string(id));
  it->second.descriptor.availability = status;
  return it->second;
}

std::optional<ProviderEntry> ProviderRegistry::get(ProviderId id) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<ProviderEntry> ProviderRegistry::find_by_sensor(std::string_view sensor_id) const {
  std::shared_lock lock(mutex_);
  auto it = by_sensor_.find(sensor_id);
  if (it == by_sensor_.end()) return std::nullopt;
  return entries_.at(it->second);
}

bool ProviderRegistry::is_online(ProviderId id) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(id);
  return it != entries_.end() && it->second.descriptor.availability == Availability::online;
}

bool ProviderRegistry::mentions(std::string_view attribute) const {
  std::shared_lock lock(mutex_);
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& kv) { return kv.second.descriptor.provides(attribute); });
}

std::vector<ProviderEntry> ProviderRegistry::entries() const {
  std::shared_lock lock(mutex_);
  std::vector<ProviderEntry> out;
  for (const auto& [id, e] : entries_) out.push_back(e);
  return out;
}

std::size_t ProviderRegistry::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::vector<AttributeCatalogEntry> ProviderRegistry::catalog() const {
  std::shared_lock lock(mutex_);
  std::map<std::string, AttributeCatalogEntry> by_name;
  for (const auto& [id, e] : entries_) {
    for (const auto& attr : e.descriptor.provided_attributes) {
      auto& slot = by_name.try_emplace(attr.name, AttributeCatalogEntry{attr, 0, false}).first->second;
      if (e.descriptor.availability == Availability::online) ++slot.provider_count;
    }
  }
  std::vector<AttributeCatalogEntry> out;
  for (auto& [name, entry] : by_name) out.push_back(std::move(entry));
  return out;
}

std::vector<AttributeCatalogEntry> capturable_attributes(const ProviderRegistry& registry,
                                                         const KnowledgeBase& kb) {
  std::map<std::string, AttributeCatalogEntry> result;
  for (auto& entry : registry.catalog()) {
    entry.derivable = kb.derivable(entry.attribute.name);
    if (entry.provider_count > 0) result.emplace(entry.attribute.name, entry);
  }

  // Derived attributes in dependency order: one pass over a topological
  // order reaches the fixed point.
  for (const auto& name : kb.topological_order()) {
    if (result.count(name)) continue;
    bool ok = false;
    for (const auto& rule : kb.rules_for(name)) {
      if (std::all_of(rule.conditions.begin(), rule.conditions.end(),
                      [&](const Condition& c) { return result.count(c.attribute) > 0; })) {
        ok = true;
        break;
      }
    }
    if (!ok) continue;
    AttributeCatalogEntry entry;
    entry.attribute = kb.attribute_info(name).value_or(ContextAttribute{name, "", ValueKind::any});
    entry.provider_count = 0;
    entry.derivable = true;
    result.emplace(name, entry);
  }

  std::vector<AttributeCatalogEntry> out;
  for (auto& [name, entry] : result) out.push_back(std::move(entry));
  return out;
}

}  // namespace senseflow
