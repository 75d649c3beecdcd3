// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "senseflow/discoverer.hpp"

#include <algorithm>
#include <limits>

#include "senseflow/error.hpp"

namespace senseflow {

std::string_view to_string(Quality q) {
  switch (q) {
    case Quality::measured: return "measured";
    case Quality::derived: return "derived";
    case Quality::unknown: return "unknown";
  }
  return "unknown";
}

std::optional<Quality> parse_quality(std::string_view text) {
  if (text == "measured") return Quality::measured;
  if (text == "derived") return Quality::derived;
  if (text == "unknown") return Quality::unknown;
  return std::nullopt;
}

std::string_view to_string(DiscovererState state) {
  switch (state) {
    case DiscovererState::created: return "created";
    case DiscovererState::running: return "running";
    case DiscovererState::stopped: return "stopped";
  }
  return "?";
}

Discoverer::Discoverer(PlanSpec plan, const ProviderRegistry& registry, const OperatorRepository& operators)
    : plan_(std::move(plan)), registry_(registry), operators_(operators) {}

DiscovererState Discoverer::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

std::size_t Discoverer::subscriber_count() const {
  std::lock_guard lock(mutex_);
  return subscribers_;
}

void Discoverer::start() {
  std::scoped_lock lock(tick_mutex_, mutex_);
  if (state_ == DiscovererState::running) return;
  for (auto& [idx, slot] : sources_) {
    slot.wrapper = slot.prototype->instantiate(slot.prototype->origin());
    slot.last_pull_ms.reset();
    slot.held.clear();
  }
  state_ = DiscovererState::running;
}

void Discoverer::stop() {
  std::scoped_lock lock(tick_mutex_, mutex_);
  if (state_ != DiscovererState::running) {
    if (state_ == DiscovererState::created) state_ = DiscovererState::stopped;
    return;
  }
  for (auto& [idx, slot] : sources_) slot.wrapper.reset();
  state_ = DiscovererState::stopped;
}

std::size_t Discoverer::add_subscriber() {
  std::lock_guard lock(mutex_);
  return ++subscribers_;
}

std::size_t Discoverer::remove_subscriber() {
  std::size_t remaining;
  {
    std::lock_guard lock(mutex_);
    if (subscribers_ > 0) --subscribers_;
    remaining = subscribers_;
  }
  if (remaining == 0) stop();
  return remaining;
}

void Discoverer::add_listener(const std::string& id, RecordListener listener) {
  std::lock_guard lock(mutex_);
  listeners_[id] = std::move(listener);
}

void Discoverer::remove_listener(const std::string& id) {
  std::lock_guard lock(mutex_);
  listeners_.erase(id);
}

std::optional<DataRecord> Discoverer::latest() const {
  std::lock_guard lock(mutex_);
  return latest_;
}

DataRecord Discoverer::tick(const Clock& clock) {
  std::lock_guard tick_lock(tick_mutex_);
  {
    std::lock_guard lock(mutex_);
    if (state_ != DiscovererState::running) {
      throw Error(ErrorCode::state_violation,
                  "discoverer " + plan_.plan_id + " is " + std::string(to_string(state_)));
    }
  }
  const std::int64_t now = clock.now_ms();

  std::map<std::string, Value, std::less<>> bindings;
  std::map<std::string, Quality> quality;

  for (auto& [idx, slot] : sources_) {
    if (!registry_.is_online(slot.node.provider_id)) {
      slot.last_pull_ms.reset();
      slot.held.clear();
    } else if (!slot.last_pull_ms || now - *slot.last_pull_ms >= slot.sampling_interval_ms) {
      try {
        auto reading = slot.wrapper->pull(clock);
        slot.held.clear();
        for (auto& [name, value] : reading.values) slot.held[name] = std::move(value);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::sensor_fault) throw;
        slot.held.clear();
      }
      slot.last_pull_ms = now;
    }
    for (const auto& a : slot.node.attributes) {
      auto it = slot.held.find(a);
      Value v = it == slot.held.end() ? Value::unknown() : it->second;
      quality[a] = v.is_unknown() ? Quality::unknown : Quality::measured;
      bindings[a] = std::move(v);
    }
  }

  for (std::size_t idx : order_) {
    const auto* node = std::get_if<DeriveNode>(&plan_.nodes[idx]);
    if (!node) continue;
    std::vector<TimedValue> inputs;
    inputs.reserve(node->inputs.size());
    for (const auto& in : node->inputs) inputs.push_back({now, bindings[in]});
    OperatorParams params;
    params.bindings = node->inputs;
    params.rules = node->rules;
    Value v = operators_.apply(node->operator_id, std::span<const TimedValue>(inputs), params);
    quality[node->attribute] = v.is_unknown() ? Quality::unknown : Quality::derived;
    bindings[node->attribute] = std::move(v);
  }

  DataRecord record;
  record.timestamp_ms = now;
  for (const auto& out : plan_.outputs) {
    record.values[out] = bindings[out];
    record.annotations.quality[out] = quality.count(out) ? quality[out] : Quality::unknown;
  }
  for (const auto& [idx, slot] : sources_) {
    record.annotations.geographical_location[slot.node.sensor_id] = slot.node.location_label;
    record.annotations.source_sensor_ids.push_back(slot.node.sensor_id);
  }
  std::sort(record.annotations.source_sensor_ids.begin(), record.annotations.source_sensor_ids.end());

  std::vector<RecordListener> listeners;
  {
    std::lock_guard lock(mutex_);
    latest_ = record;
    for (const auto& [id, l] : listeners_) listeners.push_back(l);
  }
  ++ticks_;
  for (const auto& l : listeners) l(record);
  return record;
}

std::shared_ptr<Discoverer> compile(const PlanSpec& plan, const ProviderRegistry& registry,
                                    WrapperRepository& wrappers, const SddRepository& sdds,
                                    const OperatorRepository& operators) {
  validate_plan(plan);
  std::shared_ptr<Discoverer> d(new Discoverer(plan, registry, operators));
  d->order_ = topological_order(plan);

  std::int64_t tick = std::numeric_limits<std::int64_t>::max();
  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    if (const auto* s = std::get_if<SourceNode>(&plan.nodes[i])) {
      auto entry = registry.get(s->provider_id);
      if (!entry) {
        throw Error(ErrorCode::wrapper_unavailable, "provider " + to_string(s->provider_id) + " (" +
                                                         s->sensor_id + ") is not registered");
      }
      Discoverer::SourceSlot slot;
      slot.node = *s;
      slot.prototype = resolve_wrapper(entry->descriptor.model_id, wrappers, sdds,
                                       entry->descriptor.driver_overrides);
      slot.sampling_interval_ms = slot.prototype->definition().sampling_interval_ms;
      tick = std::min(tick, slot.sampling_interval_ms);
      d->sources_.emplace(i, std::move(slot));
    } else {
      const auto& node = std::get<DeriveNode>(plan.nodes[i]);
      if (!operators.descriptor(node.operator_id)) {
        throw Error(ErrorCode::no_operator_found, "operator " + node.operator_id);
      }
    }
  }
  d->tick_interval_ms_ = std::min(tick, plan.delivery_interval_ms);
  return d;
}

std::shared_ptr<Discoverer> DiscovererRepository::lookup_or_register(const std::string& key) {
  std::shared_ptr<Discoverer> found;
  {
    std::shared_lock lock(mutex_);
    auto it = by_key_.find(key);
    if (it == by_key_.end()) return nullptr;
    found = it->second;
  }
  found->add_subscriber();
  if (found->state() != DiscovererState::running) found->start();
  return found;
}

void DiscovererRepository::insert(std::shared_ptr<Discoverer> discoverer) {
  discoverer->add_subscriber();
  discoverer->start();
  compilations_.fetch_add(1);
  std::unique_lock lock(mutex_);
  by_key_[discoverer->canonical_key()] = std::move(discoverer);
}

std::shared_ptr<Discoverer> DiscovererRepository::find_by_plan(const std::string& plan_id) const {
  std::shared_lock lock(mutex_);
  for (const auto& [k, d] : by_key_)
    if (d->plan_id() == plan_id) return d;
  return nullptr;
}

std::vector<std::shared_ptr<Discoverer>> DiscovererRepository::list() const {
  std::shared_lock lock(mutex_);
  std::vector<std::shared_ptr<Discoverer>> out;
  for (const auto& [k, d] : by_key_) out.push_back(d);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a->plan_id() < b->plan_id(); });
  return out;
}

std::map<std::string, Value> reevaluate(const PlanSpec& plan, const std::map<std::string, Value>& measured) {
  std::map<std::string, Value, std::less<>> bindings(measured.begin(), measured.end());
  std::map<std::string, Value> derived;
  for (std::size_t idx : topological_order(plan)) {
    const auto* node = std::get_if<DeriveNode>(&plan.nodes[idx]);
    if (!node) continue;
    Value v = evaluate_rules(node->rules, bindings);
    bindings[node->attribute] = v;
    derived[node->attribute] = v;
  }
  return derived;
}

}  // namespace senseflow
