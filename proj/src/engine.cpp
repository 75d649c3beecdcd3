// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "senseflow/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "senseflow/error.hpp"

namespace senseflow {

namespace {

using detail::json;
using ordered = nlohmann::ordered_json;

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorCode::config_error, message); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Re-throw `e` with `origin` prefixed to its message.
[[noreturn]] void rethrow_with(const Error& e, const std::string& origin) {
  throw Error(e.code(), origin + ": " + e.detail());
}

std::string rule_text(const Rule& r) {
  std::string s = "IF ";
  for (std::size_t i = 0; i < r.conditions.size(); ++i) {
    if (i) s += " AND ";
    s += r.conditions[i].attribute + " " + std::string(to_string(r.conditions[i].op)) + " " +
         to_display(r.conditions[i].threshold);
  }
  s += " THEN " + r.consequent.attribute + " = " + to_display(r.consequent.value);
  if (r.else_value) s += " ELSE " + to_display(*r.else_value);
  return s;
}

}  // namespace

std::string_view to_string(ClockMode mode) { return mode == ClockMode::real ? "real" : "simulated"; }

std::optional<ClockMode> parse_clock_mode(std::string_view text) {
  if (text == "real") return ClockMode::real;
  if (text == "simulated") return ClockMode::simulated;
  return std::nullopt;
}

std::optional<InspectKind> parse_inspect_kind(std::string_view text) {
  if (text == "sensors") return InspectKind::sensors;
  if (text == "attributes") return InspectKind::attributes;
  if (text == "plans") return InspectKind::plans;
  if (text == "operators") return InspectKind::operators;
  if (text == "subscriptions") return InspectKind::subscriptions;
  return std::nullopt;
}

ScenarioConfig parse_scenario_config(std::string_view document, const std::filesystem::path& base) {
  json doc = detail::parse_json(document, ErrorCode::config_error, "scenario config");
  if (!doc.is_object()) config_error("scenario config must be an object");
  auto path_of = [&](const json& j, const std::string& field) {
    if (!j.is_string() || j.get<std::string>().empty()) config_error(field + " must be a non-empty path");
    std::filesystem::path p = j.get<std::string>();
    return p.is_relative() ? base / p : p;
  };
  auto require = [&](const char* key) -> const json& {
    auto it = doc.find(key);
    if (it == doc.end()) config_error(std::string(key) + ": missing");
    return *it;
  };
  auto path_list = [&](const char* key, bool required) {
    std::vector<std::filesystem::path> out;
    auto it = doc.find(key);
    if (it == doc.end()) {
      if (required) config_error(std::string(key) + ": missing");
      return out;
    }
    if (!it->is_array()) config_error(std::string(key) + " must be a list");
    for (std::size_t i = 0; i < it->size(); ++i) {
      out.push_back(path_of((*it)[i], std::string(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  };

  ScenarioConfig c;
  c.sdd_directory = path_of(require("sdd_directory"), "sdd_directory");
  c.sdd_fallback_directories = path_list("sdd_fallback_directories", false);
  c.fleet_file = path_of(require("fleet_file"), "fleet_file");
  c.domain_files = path_list("domain_files", true);
  c.requests = path_list("requests", false);
  if (auto it = doc.find("run_for_ms"); it != doc.end()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) config_error("run_for_ms must be a non-negative integer");
    c.run_for_ms = it->get<std::int64_t>();
  }
  if (auto it = doc.find("clock_mode"); it != doc.end()) {
    auto mode = it->is_string() ? parse_clock_mode(it->get<std::string>()) : std::nullopt;
    if (!mode) config_error("clock_mode must be 'real' or 'simulated'");
    c.clock_mode = *mode;
  }
  if (auto it = doc.find("start_time_ms"); it != doc.end()) {
    if (!it->is_number_integer()) config_error("start_time_ms must be an integer");
    c.start_time_ms = it->get<std::int64_t>();
  }
  if (auto it = doc.find("events"); it != doc.end()) {
    if (!it->is_array()) config_error("events must be a list");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& e = (*it)[i];
      const std::string where = "events[" + std::to_string(i) + "]";
      if (!e.is_object() || !e.contains("at_ms") || !e["at_ms"].is_number_integer() ||
          !e.contains("sensor_id") || !e["sensor_id"].is_string()) {
        config_error(where + ": needs at_ms and sensor_id");
      }
      ScenarioEvent ev;
      ev.at_ms = e["at_ms"].get<std::int64_t>();
      ev.sensor_id = e["sensor_id"].get<std::string>();
      auto status = e.value("availability", std::string("offline"));
      if (status == "online") ev.availability = Availability::online;
      else if (status == "offline") ev.availability = Availability::offline;
      else config_error(where + ".availability must be 'online' or 'offline'");
      c.events.push_back(std::move(ev));
    }
  }

  // Fail fast on missing inputs.
  if (!std::filesystem::is_directory(c.sdd_directory)) config_error("sdd_directory not found: " + c.sdd_directory.string());
  if (!std::filesystem::is_regular_file(c.fleet_file)) config_error("fleet_file not found: " + c.fleet_file.string());
  for (const auto& p : c.domain_files)
    if (!std::filesystem::is_regular_file(p)) config_error("domain file not found: " + p.string());
  for (const auto& p : c.requests)
    if (!std::filesystem::is_regular_file(p)) config_error("request file not found: " + p.string());
  return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  try {
    return parse_scenario_config(read_text(path), path.parent_path());
  } catch (const Error& e) {
    rethrow_with(e, path.string());
  }
}

std::vector<SensorDescriptor> parse_fleet(std::string_view document) {
  json doc = detail::parse_json(document, ErrorCode::config_error, "fleet");
  const json* list = &doc;
  if (doc.is_object()) {
    auto it = doc.find("sensors");
    if (it == doc.end()) config_error("fleet: missing 'sensors'");
    list = &*it;
  }
  if (!list->is_array()) config_error("fleet: 'sensors' must be a list");
  std::vector<SensorDescriptor> out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const json& s = (*list)[i];
    const std::string where = "sensors[" + std::to_string(i) + "]";
    if (!s.is_object()) config_error(where + ": must be an object");
    SensorDescriptor d;
    auto str = [&](const char* key) {
      auto it = s.find(key);
      if (it == s.end() || !it->is_string()) config_error(where + "." + key + ": must be a string");
      return it->get<std::string>();
    };
    d.sensor_id = str("sensor_id");
    d.model_id = str("model_id");
    if (auto loc = s.find("location"); loc != s.end()) {
      if (!loc->is_object()) config_error(where + ".location: must be an object");
      d.location.latitude = loc->value("latitude", 0.0);
      d.location.longitude = loc->value("longitude", 0.0);
      d.location.label = loc->value("label", std::string());
    }
    if (auto cost = s.find("cost_rank"); cost != s.end()) {
      if (!cost->is_number_integer()) config_error(where + ".cost_rank: must be an integer");
      d.cost_rank = cost->get<int>();
    }
    if (auto av = s.find("availability"); av != s.end()) {
      auto text = av->is_string() ? av->get<std::string>() : std::string();
      if (text == "online") d.availability = Availability::online;
      else if (text == "offline") d.availability = Availability::offline;
      else config_error(where + ".availability: must be 'online' or 'offline'");
    }
    if (auto ov = s.find("driver_overrides"); ov != s.end()) {
      if (!ov->is_object()) config_error(where + ".driver_overrides: must be an object");
      for (auto it = ov->begin(); it != ov->end(); ++it) {
        auto v = detail::value_from_json(it.value());
        if (!v) config_error(where + ".driver_overrides." + it.key() + ": must be a scalar");
        d.driver_overrides[it.key()] = *v;
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------

Engine::Engine(EngineOptions options)
    : options_(std::move(options)),
      sdds_(options_.sdd_directories),
      operators_(OperatorRepository::with_builtins()) {
  if (options_.clock_mode == ClockMode::simulated) {
    auto sim = std::make_unique<SimulatedClock>(options_.start_time_ms);
    sim_clock_ = sim.get();
    clock_ = std::move(sim);
  } else {
    clock_ = std::make_unique<SystemClock>();
  }
}

Engine::~Engine() { shutdown(); }

std::unique_ptr<Engine> Engine::boot(const ScenarioConfig& config, EngineOptions options) {
  options.clock_mode = config.clock_mode;
  options.start_time_ms = config.start_time_ms;
  options.sdd_directories.clear();
  options.sdd_directories.push_back(config.sdd_directory);
  for (const auto& d : config.sdd_fallback_directories) options.sdd_directories.push_back(d);

  auto engine = std::make_unique<Engine>(options);
  engine->sdds_.preload();
  engine->register_fleet_document(read_text(config.fleet_file), config.fleet_file.string());
  for (const auto& f : config.domain_files) engine->load_domain_file(f);
  for (const auto& ev : config.events) {
    engine->schedule_availability(engine->now_ms() + ev.at_ms, ev.sensor_id, ev.availability);
  }
  return engine;
}

void Engine::register_fleet_document(std::string_view document, const std::string& origin) {
  std::vector<SensorDescriptor> fleet;
  try {
    fleet = parse_fleet(document);
  } catch (const Error& e) {
    rethrow_with(e, origin);
  }
  for (auto& d : fleet) {
    try {
      register_sensor(std::move(d));
    } catch (const Error& e) {
      rethrow_with(e, origin);
    }
  }
}

ProviderEntry Engine::register_sensor(SensorDescriptor descriptor) {
  if (descriptor.provided_attributes.empty()) {
    auto sdd = sdds_.find(descriptor.model_id);
    if (!sdd) {
      config_error("sensor '" + descriptor.sensor_id + "' references unknown model '" + descriptor.model_id +
                   "' (no SDD)");
    }
    descriptor.provided_attributes = sdd->provided_attributes;
  }
  return registry_.register_provider(std::move(descriptor), now_ms());
}

DomainPlugin Engine::load_domain_file(const std::filesystem::path& path) {
  try {
    return kb_.load_domain(read_text(path));
  } catch (const Error& e) {
    rethrow_with(e, path.string());
  }
}

SubmitResult Engine::submit(std::string_view request_document) {
  std::lock_guard lock(mutex_);
  char rid[32];
  std::snprintf(rid, sizeof(rid), "req-%04llu", static_cast<unsigned long long>(next_request_++));
  auto validated = validate_request(RequestDocument{std::string(request_document)}, rid);

  PlanSpec plan = build_plan(validated.request, registry_, kb_, *operators_);

  SubmitResult result;
  auto discoverer = discoverers_.lookup_or_register(plan.canonical_key);
  bool fresh = false;
  if (discoverer) {
    result.reused = true;
  } else {
    discoverer = compile(plan, registry_, wrappers_, sdds_, *operators_);
    discoverers_.insert(discoverer);
    fresh = true;
  }
  const auto& used = discoverer->plan();

  auto sink = make_sink(validated.draft.sink, options_.output_directory);
  if (options_.truncate_file_sinks) {
    if (auto* file = dynamic_cast<AppendFileSink*>(sink.get())) {
      std::error_code ec;
      std::filesystem::remove(file->path(), ec);
    }
  }
  const auto id = subscriptions_.subscribe(validated.draft, {used.canonical_key, used.plan_id}, now_ms(),
                                           std::move(sink));
  attach(discoverer, id, subscriptions_.dispatcher(id), fresh || !next_tick_.count(used.plan_id));

  result.subscription_id = id;
  result.plan_id = used.plan_id;
  result.canonical_key = used.canonical_key;
  result.sources = used.source_count();
  result.derived = used.derive_count();
  result.outputs = used.outputs;
  return result;
}

void Engine::attach(const std::shared_ptr<Discoverer>& d, const std::string& subscription_id,
                    const std::shared_ptr<SubscriptionDispatcher>& dispatcher, bool fresh_discoverer) {
  std::weak_ptr<SubscriptionDispatcher> weak = dispatcher;
  d->add_listener(subscription_id, [weak](const DataRecord& r) {
    if (auto p = weak.lock()) p->offer(r);
  });
  bound_[subscription_id] = d;
  if (fresh_discoverer || !next_tick_.count(d->plan_id())) next_tick_[d->plan_id()] = now_ms();
  if (running_) {
    spawn_discoverer_worker(d);
    spawn_dispatch_worker(subscription_id, dispatcher);
  }
}

void Engine::detach(const std::string& subscription_id) {
  std::lock_guard lock(mutex_);
  auto it = bound_.find(subscription_id);
  if (it == bound_.end()) return;
  auto d = it->second;
  bound_.erase(it);
  d->remove_listener(subscription_id);
  if (d->remove_subscriber() == 0) next_tick_.erase(d->plan_id());
}

void Engine::unsubscribe(const std::string& subscription_id) {
  auto dispatcher = subscriptions_.dispatcher(subscription_id);
  if (!dispatcher) throw Error(ErrorCode::unknown_subscription, subscription_id);
  dispatcher->cancel();
  detach(subscription_id);
}

void Engine::set_availability(const std::string& sensor_id, Availability status) {
  auto entry = registry_.find_by_sensor(sensor_id);
  if (!entry) throw Error(ErrorCode::unknown_provider, "sensor '" + sensor_id + "'");
  registry_.set_availability(entry->provider_id, status);
}

void Engine::schedule_availability(std::int64_t at_ms, const std::string& sensor_id, Availability status) {
  std::lock_guard lock(mutex_);
  if (!registry_.find_by_sensor(sensor_id)) throw Error(ErrorCode::unknown_provider, "sensor '" + sensor_id + "'");
  events_.emplace(at_ms, std::make_pair(sensor_id, status));
}

void Engine::apply_due_events(std::int64_t now) {
  while (!events_.empty() && events_.begin()->first <= now) {
    auto [sensor, status] = events_.begin()->second;
    events_.erase(events_.begin());
    set_availability(sensor, status);
  }
}

void Engine::run_for(std::int64_t duration_ms) {
  if (duration_ms < 0) duration_ms = 0;
  if (options_.clock_mode == ClockMode::real) {
    const auto end = now_ms() + duration_ms;
    while (true) {
      std::int64_t wake = end;
      {
        std::lock_guard lock(mutex_);
        apply_due_events(now_ms());
        if (!events_.empty()) wake = std::min(wake, events_.begin()->first);
      }
      const auto now = now_ms();
      if (now >= end) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(std::max<std::int64_t>(1, wake - now)));
    }
    return;
  }

  std::lock_guard lock(mutex_);
  const std::int64_t end = now_ms() + duration_ms;
  while (true) {
    const std::int64_t now = now_ms();
    std::optional<std::int64_t> next;
    auto consider = [&](std::int64_t t) { next = next ? std::min(*next, t) : t; };
    if (!events_.empty()) consider(events_.begin()->first);
    for (const auto& [plan, t] : next_tick_) consider(t);
    for (const auto& d : subscriptions_.dispatchers())
      if (auto due = d->next_due()) consider(*due);
    if (!next) break;
    const std::int64_t t = std::max(*next, now);
    if (t >= end) break;
    sim_clock_->set(t);

    apply_due_events(t);

    for (auto& [plan_id, tick_at] : next_tick_) {
      if (tick_at > t) continue;
      auto d = discoverers_.find_by_plan(plan_id);
      if (d && d->state() == DiscovererState::running) d->tick(*clock_);
      const auto interval = d ? d->tick_interval_ms() : 1;
      while (tick_at <= t) tick_at += interval;
    }

    for (const auto& disp : subscriptions_.dispatchers()) {
      auto due = disp->next_due();
      if (!due || *due > t) continue;
      auto outcome = disp->poll(t);
      if (outcome.expired) detach(disp->snapshot().subscription_id);
    }
  }
  sim_clock_->set(end);
}

void Engine::start() {
  if (options_.clock_mode != ClockMode::real) {
    throw Error(ErrorCode::state_violation, "start() requires the real clock; use run_for()");
  }
  std::lock_guard lock(mutex_);
  if (running_.exchange(true)) return;
  stopping_ = false;
  for (const auto& d : discoverers_.list()) spawn_discoverer_worker(d);
  for (const auto& [id, d] : bound_) spawn_dispatch_worker(id, subscriptions_.dispatcher(id));
}

void Engine::spawn_discoverer_worker(const std::shared_ptr<Discoverer>& d) {
  std::lock_guard wl(worker_mutex_);
  if (discoverer_workers_[d->plan_id()]) return;
  discoverer_workers_[d->plan_id()] = true;
  workers_.emplace_back([this, d] {
    while (!stopping_) {
      if (d->state() == DiscovererState::running) {
        try {
          d->tick(*clock_);
        } catch (const std::exception& e) {
          std::fprintf(stderr, "[discoverer %s] %s\n", d->plan_id().c_str(), e.what());
        }
      }
      std::unique_lock lk(worker_mutex_);
      worker_cv_.wait_for(lk, std::chrono::milliseconds(d->tick_interval_ms()), [this] { return stopping_.load(); });
    }
  });
}

void Engine::spawn_dispatch_worker(const std::string& subscription_id,
                                   const std::shared_ptr<SubscriptionDispatcher>& dispatcher) {
  std::lock_guard wl(worker_mutex_);
  workers_.emplace_back([this, subscription_id, dispatcher] {
    while (!stopping_) {
      const auto status = dispatcher->snapshot().status;
      if (status == SubscriptionStatus::expired || status == SubscriptionStatus::cancelled) break;
      const auto now = now_ms();
      auto due = dispatcher->next_due();
      if (!due) {
        dispatcher->wait(*clock_, now + 100);
        continue;
      }
      if (*due > now) {
        dispatcher->wait(*clock_, *due);
        continue;
      }
      auto outcome = dispatcher->poll(now);
      if (outcome.expired) {
        detach(subscription_id);
        break;
      }
      if (!outcome.delivered && !outcome.failed) dispatcher->wait(*clock_, now + 1);
    }
  });
}

void Engine::shutdown() {
  if (!running_.exchange(false)) return;
  stopping_ = true;
  worker_cv_.notify_all();
  for (const auto& d : subscriptions_.dispatchers()) d->wake();
  std::vector<std::thread> threads;
  {
    std::lock_guard wl(worker_mutex_);
    threads.swap(workers_);
    discoverer_workers_.clear();
  }
  for (auto& t : threads)
    if (t.joinable()) t.join();
}

std::string Engine::drain_stream(const std::string& subscription_id) {
  auto d = subscriptions_.dispatcher(subscription_id);
  if (!d) throw Error(ErrorCode::unknown_subscription, subscription_id);
  auto* stream = dynamic_cast<StreamSink*>(&d->sink());
  if (!stream) throw Error(ErrorCode::sink_unavailable, subscription_id + " does not use a stream endpoint");
  return stream->drain();
}

ordered Engine::plan_dump(const std::string& plan_id) const {
  auto d = const_cast<DiscovererRepository&>(discoverers_).find_by_plan(plan_id);
  if (!d) throw Error(ErrorCode::state_violation, "unknown plan '" + plan_id + "'");
  const auto& plan = d->plan();
  ordered out;
  out["plan_id"] = plan.plan_id;
  out["canonical_key"] = plan.canonical_key;
  ordered nodes = ordered::array();
  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    ordered n;
    n["index"] = i;
    if (const auto* s = std::get_if<SourceNode>(&plan.nodes[i])) {
      n["type"] = "source";
      n["sensor_id"] = s->sensor_id;
      n["provider_id"] = to_string(s->provider_id);
      n["model_id"] = s->model_id;
      n["location"] = s->location_label;
      n["attributes"] = s->attributes;
    } else {
      const auto& dn = std::get<DeriveNode>(plan.nodes[i]);
      n["type"] = "derive";
      n["attribute"] = dn.attribute;
      n["operator_id"] = dn.operator_id;
      n["inputs"] = dn.inputs;
      ordered rules = ordered::array();
      for (const auto& r : dn.rules) rules.push_back(rule_text(r));
      n["rules"] = std::move(rules);
    }
    nodes.push_back(std::move(n));
  }
  out["nodes"] = std::move(nodes);
  ordered edges = ordered::array();
  for (const auto& e : plan.edges) {
    ordered j;
    j["from"] = e.from;
    j["to"] = e.to;
    j["attribute"] = e.attribute;
    edges.push_back(std::move(j));
  }
  out["edges"] = std::move(edges);
  out["outputs"] = plan.outputs;
  out["evaluation_order"] = d->evaluation_order();
  out["tick_interval_ms"] = d->tick_interval_ms();
  return out;
}

ordered Engine::inspect(InspectKind kind) const {
  ordered out = ordered::array();
  switch (kind) {
    case InspectKind::sensors:
      for (const auto& e : registry_.entries()) {
        ordered j;
        j["provider_id"] = to_string(e.provider_id);
        j["sensor_id"] = e.descriptor.sensor_id;
        j["model_id"] = e.descriptor.model_id;
        j["location"] = {{"label", e.descriptor.location.label},
                         {"latitude", e.descriptor.location.latitude},
                         {"longitude", e.descriptor.location.longitude}};
        j["availability"] = std::string(to_string(e.descriptor.availability));
        j["cost_rank"] = e.descriptor.cost_rank;
        ordered attrs = ordered::array();
        for (const auto& a : e.descriptor.provided_attributes) attrs.push_back(a.name);
        j["attributes"] = std::move(attrs);
        j["registered_at"] = e.registered_at_ms;
        out.push_back(std::move(j));
      }
      break;
    case InspectKind::attributes:
      for (const auto& a : capturable_attributes(registry_, kb_)) {
        ordered j;
        j["name"] = a.attribute.name;
        j["unit"] = a.attribute.unit;
        j["kind"] = std::string(to_string(a.attribute.kind));
        j["provider_count"] = a.provider_count;
        j["derivable"] = a.derivable;
        out.push_back(std::move(j));
      }
      break;
    case InspectKind::plans:
      for (const auto& d : const_cast<DiscovererRepository&>(discoverers_).list()) {
        ordered j;
        j["plan_id"] = d->plan_id();
        j["canonical_key"] = d->canonical_key();
        j["state"] = std::string(to_string(d->state()));
        j["subscribers"] = d->subscriber_count();
        j["tick_interval_ms"] = d->tick_interval_ms();
        j["sources"] = d->plan().source_count();
        j["derived"] = d->plan().derive_count();
        j["outputs"] = d->plan().outputs;
        out.push_back(std::move(j));
      }
      break;
    case InspectKind::operators:
      for (const auto& o : operators_->list()) {
        ordered j;
        j["id"] = o.id;
        j["capability"] = std::string(to_string(o.capability));
        j["arity"] = o.arity ? ordered(*o.arity) : ordered("variadic");
        ordered kinds = ordered::array();
        for (auto k : o.input_kinds) kinds.push_back(std::string(to_string(k)));
        j["input_kinds"] = std::move(kinds);
        j["output_kind"] = std::string(to_string(o.output_kind));
        ordered params = ordered::array();
        for (const auto& p : o.params) {
          params.push_back({{"name", p.name}, {"kind", std::string(to_string(p.kind))}, {"required", p.required}});
        }
        j["params"] = std::move(params);
        j["description"] = o.description;
        out.push_back(std::move(j));
      }
      break;
    case InspectKind::subscriptions:
      for (const auto& s : subscriptions_.list()) {
        ordered j;
        j["subscription_id"] = s.subscription_id;
        j["request_id"] = s.request_id;
        j["user_id"] = s.user_id;
        j["format"] = std::string(to_string(s.output_format));
        j["interval_ms"] = s.delivery_interval_ms;
        j["sink"] = {{"kind", std::string(to_string(s.sink.kind))}, {"target", s.sink.target}};
        j["created_at"] = s.created_at_ms;
        j["expires_at"] = s.expires_at_ms ? ordered(*s.expires_at_ms) : ordered(nullptr);
        j["plan_id"] = s.plan_id;
        j["status"] = std::string(to_string(s.status));
        j["deliveries"] = s.deliveries;
        j["failures"] = s.failures;
        out.push_back(std::move(j));
      }
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<DataRecord> parse_delivery(std::string_view text, OutputFormat format) {
  return format == OutputFormat::csv ? parse_csv(text) : parse_json_lines(text);
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace

ScenarioReport run_scenario(const ScenarioConfig& config_in, const std::filesystem::path& out_directory,
                            const ScenarioOverrides& overrides) {
  ScenarioConfig config = config_in;
  if (overrides.run_for_ms) config.run_for_ms = *overrides.run_for_ms;
  if (overrides.clock_mode) config.clock_mode = *overrides.clock_mode;

  ScenarioReport report;
  std::filesystem::create_directories(out_directory);
  report.report_file = out_directory / "report.json";
  report.plans_file = out_directory / "plans.json";

  ordered doc;
  doc["clock"] = std::string(to_string(config.clock_mode));
  doc["run_for_ms"] = config.run_for_ms;

  auto finish = [&]() -> ScenarioReport {
    doc["exit_status"] = report.exit_status;
    doc["error"] = report.error.empty() ? ordered(nullptr) : ordered(report.error);
    ordered subs = ordered::array();
    for (const auto& s : report.subscriptions) {
      ordered j;
      j["subscription_id"] = s.subscription_id;
      j["user_id"] = s.user_id;
      j["plan_id"] = s.plan_id;
      j["status"] = s.status;
      j["deliveries"] = s.deliveries;
      j["failures"] = s.failures;
      j["file"] = s.file.filename().string();
      j["sample"] = s.sample;
      j["records_checked"] = s.records_checked;
      j["consistency_mismatches"] = s.consistency_mismatches;
      subs.push_back(std::move(j));
    }
    doc["subscriptions"] = std::move(subs);
    write_text(report.report_file, doc.dump(2) + "\n");
    return report;
  };

  EngineOptions options;
  options.output_directory = out_directory;
  options.truncate_file_sinks = true;

  std::unique_ptr<Engine> engine;
  try {
    engine = Engine::boot(config, options);
    for (const auto& path : config.requests) {
      try {
        engine->submit(read_text(path));
      } catch (const Error& e) {
        rethrow_with(e, path.string());
      }
    }
  } catch (const Error& e) {
    report.exit_status = 1;
    report.error = e.what();
    return finish();
  }

  if (config.clock_mode == ClockMode::real) engine->start();
  engine->run_for(config.run_for_ms);
  engine->shutdown();

  ordered plans = ordered::array();
  for (const auto& d : engine->discoverers().list()) plans.push_back(engine->plan_dump(d->plan_id()));
  write_text(report.plans_file, plans.dump(2) + "\n");

  for (const auto& s : engine->subscriptions().list()) {
    SubscriptionReport r;
    r.subscription_id = s.subscription_id;
    r.user_id = s.user_id;
    r.plan_id = s.plan_id;
    r.status = std::string(to_string(s.status));
    r.deliveries = s.deliveries;
    r.failures = s.failures;

    std::string contents;
    if (s.sink.kind == SinkKind::append_file) {
      r.file = std::filesystem::path(s.sink.target).is_relative() ? out_directory / s.sink.target
                                                                 : std::filesystem::path(s.sink.target);
      std::ifstream in(r.file, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      contents = ss.str();
    } else {
      auto* stream = dynamic_cast<StreamSink*>(&engine->subscriptions().dispatcher(s.subscription_id)->sink());
      contents = stream ? stream->transcript() : std::string();
      r.file = out_directory / (s.subscription_id + (s.output_format == OutputFormat::csv ? ".csv" : ".jsonl"));
      write_text(r.file, contents);
    }

    std::istringstream lines(contents);
    std::string line;
    while (r.sample.size() < 3 && std::getline(lines, line)) r.sample.push_back(line);

    // Offline re-evaluation of every derived value whose inputs the record carries.
    if (auto d = engine->discoverers().find_by_plan(s.plan_id)) {
      for (const auto& rec : parse_delivery(contents, s.output_format)) {
        std::map<std::string, Value> measured;
        for (const auto& [name, q] : rec.annotations.quality) {
          if (q == Quality::measured) measured[name] = rec.values.at(name);
        }
        std::map<std::string, Value, std::less<>> bindings(rec.values.begin(), rec.values.end());
        for (const auto& node : d->plan().nodes) {
          const auto* dn = std::get_if<DeriveNode>(&node);
          if (!dn || !rec.values.count(dn->attribute)) continue;
          bool inputs_present = std::all_of(dn->inputs.begin(), dn->inputs.end(),
                                            [&](const std::string& in) { return rec.values.count(in) > 0; });
          if (!inputs_present) continue;
          ++r.records_checked;
          if (evaluate_rules(dn->rules, bindings) != rec.values.at(dn->attribute)) ++r.consistency_mismatches;
        }
      }
    }
    if (s.status == SubscriptionStatus::degraded || r.consistency_mismatches > 0) report.exit_status = 2;
    report.subscriptions.push_back(std::move(r));
  }
  return finish();
}

}  // namespace senseflow
