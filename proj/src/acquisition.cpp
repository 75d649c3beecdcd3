// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "senseflow/acquisition.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "senseflow/error.hpp"

namespace senseflow {

namespace {

using detail::json;

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorCode::invalid_sdd, message); }

std::string read_file(const std::filesystem::path& path, ErrorCode code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(code, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const Value* lookup_param(const ParamMap& params, std::string_view attribute, std::string_view key) {
  std::string scoped = std::string(attribute) + "." + std::string(key);
  if (auto it = params.find(scoped); it != params.end()) return &it->second;
  if (auto it = params.find(key); it != params.end()) return &it->second;
  return nullptr;
}

double number_param(const ParamMap& params, std::string_view attribute, std::string_view key,
                    double fallback) {
  const Value* v = lookup_param(params, attribute, key);
  if (!v) return fallback;
  if (!v->is_number()) invalid("driver.params." + std::string(key) + " must be a number");
  return v->as_number();
}

std::string string_param(const ParamMap& params, std::string_view attribute, std::string_view key,
                         std::string fallback) {
  const Value* v = lookup_param(params, attribute, key);
  if (!v) return fallback;
  if (!v->is_string()) invalid("driver.params." + std::string(key) + " must be a string");
  return v->as_string();
}

bool bool_param(const ParamMap& params, std::string_view key, bool fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (!it->second.is_boolean()) invalid("driver.params." + std::string(key) + " must be a boolean");
  return it->second.as_boolean();
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Deterministic waveform generator, one channel per declared attribute.
class FunctionDriver final : public SensorDriver {
 public:
  FunctionDriver(const SensorDeviceDefinition& sdd, const ParamMap& params) {
    for (const auto& attr : sdd.provided_attributes) {
      Channel ch;
      ch.attribute = attr;
      ch.waveform = string_param(params, attr.name, "waveform", "constant");
      if (ch.waveform != "constant" && ch.waveform != "sine" && ch.waveform != "square" &&
          ch.waveform != "ramp") {
        invalid("driver.params.waveform: unsupported waveform '" + ch.waveform + "'");
      }
      ch.baseline = number_param(params, attr.name, "baseline", 0.0);
      ch.amplitude = number_param(params, attr.name, "amplitude", 0.0);
      ch.period_ms = number_param(params, attr.name, "period_ms", 60000.0);
      if (ch.period_ms <= 0) invalid("driver.params.period_ms must be positive");
      ch.phase_ms = number_param(params, attr.name, "phase_ms", 0.0);
      ch.noise = number_param(params, attr.name, "noise", 0.0);
      ch.resolution = number_param(params, attr.name, "resolution", 0.0);
      ch.threshold = number_param(params, attr.name, "threshold", 0.5);
      if (attr.kind == ValueKind::string) {
        ch.text = string_param(params, attr.name, "value", "");
      }
      if (attr.kind == ValueKind::geo) {
        ch.geo = {number_param(params, attr.name, "latitude", 0.0),
                  number_param(params, attr.name, "longitude", 0.0)};
      }
      auto seed = static_cast<std::uint64_t>(number_param(params, attr.name, "seed", 0.0));
      ch.rng.seed(seed ^ fnv1a(sdd.model_id + "/" + attr.name));
      channels_.push_back(std::move(ch));
    }
  }

  std::map<std::string, Value, std::less<>> read(std::int64_t now_ms) override {
    std::map<std::string, Value, std::less<>> out;
    for (auto& ch : channels_) out[ch.attribute.name] = ch.sample(now_ms);
    return out;
  }

 private:
  struct Channel {
    ContextAttribute attribute;
    std::string waveform;
    double baseline = 0, amplitude = 0, period_ms = 60000, phase_ms = 0, noise = 0, resolution = 0,
           threshold = 0.5;
    std::string text;
    GeoPoint geo;
    std::mt19937_64 rng;

    double signal(std::int64_t t) {
      const double cycle = std::fmod(static_cast<double>(t) + phase_ms, period_ms) / period_ms;
      const double angle = 2.0 * std::numbers::pi * cycle;
      double v = baseline;
      if (waveform == "sine") v += amplitude * std::sin(angle);
      else if (waveform == "square") v += amplitude * (std::sin(angle) >= 0 ? 1.0 : -1.0);
      else if (waveform == "ramp") v += amplitude * (2.0 * (cycle < 0 ? cycle + 1 : cycle) - 1.0);
      if (noise > 0) {
        std::normal_distribution<double> dist(0.0, noise);
        v += dist(rng);
      }
      if (resolution > 0) v = std::round(v / resolution) * resolution;
      return v;
    }

    Value sample(std::int64_t t) {
      switch (attribute.kind) {
        case ValueKind::number: return Value(signal(t));
        case ValueKind::boolean: return Value(signal(t) > threshold);
        case ValueKind::string: return Value(text);
        case ValueKind::geo: return Value(geo);
        case ValueKind::any: break;
      }
      return Value::unknown();
    }
  };

  std::vector<Channel> channels_;
};

/// Replays a comma-separated trace: header row, then one row per reading.
class TraceDriver final : public SensorDriver {
 public:
  TraceDriver(const SensorDeviceDefinition& sdd, const ParamMap& params) {
    auto it = params.find("path");
    if (it == params.end() || !it->second.is_string()) invalid("driver.params.path is required for simulated-trace");
    std::filesystem::path path = it->second.as_string();
    if (path.is_relative()) path = sdd.base_directory / path;
    loop_ = bool_param(params, "loop", true);

    std::istringstream in(read_file(path, ErrorCode::invalid_sdd));
    std::string line;
    if (!std::getline(in, line)) invalid("trace " + path.string() + ": missing header row");
    auto header = split(line);
    if (header.empty() || header.front() != "timestamp") {
      invalid("trace " + path.string() + ": first column must be 'timestamp'");
    }
    std::vector<const ContextAttribute*> columns;
    for (std::size_t i = 1; i < header.size(); ++i) {
      const ContextAttribute* attr = sdd.find_attribute(header[i]);
      if (!attr) invalid("trace " + path.string() + ": column '" + header[i] + "' is not a provided attribute");
      columns.push_back(attr);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      auto cells = split(line);
      if (cells.size() != header.size()) {
        invalid("trace " + path.string() + ":" + std::to_string(lineno) + ": expected " +
                std::to_string(header.size()) + " cells");
      }
      std::map<std::string, Value, std::less<>> row;
      for (const auto& attr : sdd.provided_attributes) row[attr.name] = Value::unknown();
      for (std::size_t c = 0; c < columns.size(); ++c) {
        auto v = parse_value(cells[c + 1], columns[c]->kind);
        if (!v) invalid("trace " + path.string() + ":" + std::to_string(lineno) + ": bad value '" + cells[c + 1] + "'");
        row[columns[c]->name] = *v;
      }
      rows_.push_back(std::move(row));
    }
    if (rows_.empty()) invalid("trace " + path.string() + ": no readings");
  }

  std::map<std::string, Value, std::less<>> read(std::int64_t) override {
    if (next_ >= rows_.size()) {
      if (!loop_) throw Error(ErrorCode::sensor_fault, "trace exhausted");
      next_ = 0;
    }
    return rows_[next_++];
  }

 private:
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  }

  std::vector<std::map<std::string, Value, std::less<>>> rows_;
  std::size_t next_ = 0;
  bool loop_ = true;
};

/// Placeholder for a hardware driver that has not been attached.
class ExternalStubDriver final : public SensorDriver {
 public:
  std::map<std::string, Value, std::less<>> read(std::int64_t) override {
    throw Error(ErrorCode::sensor_fault, "external driver not attached");
  }
};

ParamMap merge(const ParamMap& base, const ParamMap& overrides) {
  ParamMap out = base;
  for (const auto& [k, v] : overrides) out[k] = v;
  return out;
}

}  // namespace

const ContextAttribute* SensorDeviceDefinition::find_attribute(std::string_view name) const {
  for (const auto& a : provided_attributes)
    if (a.name == name) return &a;
  return nullptr;
}

SensorDeviceDefinition load_sdd(std::string_view document, SddFormat, const std::filesystem::path& base) {
  json doc = detail::parse_json(document, ErrorCode::malformed_sdd, "sdd");
  if (!doc.is_object()) throw Error(ErrorCode::malformed_sdd, "sdd: document must be an object");

  SensorDeviceDefinition sdd;
  sdd.base_directory = base;

  auto model = doc.find("model_id");
  if (model == doc.end() || !model->is_string() || model->get<std::string>().empty()) {
    invalid("model_id must be a non-empty string");
  }
  sdd.model_id = model->get<std::string>();

  auto attrs = doc.find("attributes");
  if (attrs == doc.end() || !attrs->is_array()) invalid("attributes must be a list");
  if (attrs->empty()) invalid("attributes must not be empty");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < attrs->size(); ++i) {
    const json& a = (*attrs)[i];
    const std::string where = "attributes[" + std::to_string(i) + "]";
    if (!a.is_object()) invalid(where + " must be an object");
    ContextAttribute attr;
    if (!a.contains("name") || !a["name"].is_string() || a["name"].get<std::string>().empty()) {
      invalid(where + ".name must be a non-empty string");
    }
    attr.name = a["name"].get<std::string>();
    if (a.contains("unit")) {
      if (!a["unit"].is_string()) invalid(where + ".unit must be a string");
      attr.unit = a["unit"].get<std::string>();
    }
    const std::string kind_text = a.value("kind", std::string("number"));
    auto kind = parse_value_kind(kind_text);
    if (!kind || *kind == ValueKind::any) invalid(where + ".kind '" + kind_text + "' is not a value kind");
    attr.kind = *kind;
    if (!seen.insert(attr.name).second) invalid(where + ".name '" + attr.name + "' is duplicated");
    sdd.provided_attributes.push_back(std::move(attr));
  }

  auto interval = doc.find("sampling_interval_ms");
  if (interval == doc.end() || !interval->is_number_integer()) {
    invalid("sampling_interval_ms must be an integer");
  }
  sdd.sampling_interval_ms = interval->get<std::int64_t>();
  if (sdd.sampling_interval_ms < 1) invalid("sampling_interval_ms must be >= 1");

  auto driver = doc.find("driver");
  if (driver == doc.end() || !driver->is_object()) invalid("driver must be an object");
  if (!driver->contains("kind") || !(*driver)["kind"].is_string()) invalid("driver.kind must be a string");
  sdd.driver_kind = (*driver)["kind"].get<std::string>();
  if (auto params = driver->find("params"); params != driver->end()) {
    if (!params->is_object()) invalid("driver.params must be an object");
    for (auto it = params->begin(); it != params->end(); ++it) {
      auto v = detail::value_from_json(it.value());
      if (!v) invalid("driver.params." + it.key() + " must be a scalar");
      sdd.driver_params[it.key()] = *v;
    }
  }
  return sdd;
}

SensorDeviceDefinition load_sdd_file(const std::filesystem::path& path) {
  try {
    return load_sdd(read_file(path, ErrorCode::malformed_sdd), SddFormat::json, path.parent_path());
  } catch (const Error& e) {
    if (e.detail().rfind(path.string(), 0) == 0) throw;
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

const DriverCatalog& DriverCatalog::builtin() {
  static const DriverCatalog catalog = with_builtins();
  return catalog;
}

DriverCatalog DriverCatalog::with_builtins() {
  DriverCatalog c;
  c.add("simulated-function", [](const SensorDeviceDefinition& sdd, const ParamMap& p) {
    return std::unique_ptr<SensorDriver>(std::make_unique<FunctionDriver>(sdd, p));
  });
  c.add("simulated-trace", [](const SensorDeviceDefinition& sdd, const ParamMap& p) {
    return std::unique_ptr<SensorDriver>(std::make_unique<TraceDriver>(sdd, p));
  });
  c.add("external-stub", [](const SensorDeviceDefinition&, const ParamMap&) {
    return std::unique_ptr<SensorDriver>(std::make_unique<ExternalStubDriver>());
  });
  return c;
}

void DriverCatalog::add(std::string kind, DriverFactory factory) {
  factories_[std::move(kind)] = std::move(factory);
}

const DriverFactory* DriverCatalog::find(std::string_view kind) const {
  auto it = factories_.find(kind);
  return it == factories_.end() ? nullptr : &it->second;
}

std::string_view to_string(WrapperOrigin origin) {
  return origin == WrapperOrigin::repository_cached ? "repository-cached" : "generated-from-sdd";
}

SensorWrapper::SensorWrapper(SensorDeviceDefinition sdd, DriverFactory factory, WrapperOrigin origin,
                             const ParamMap& overrides)
    : sdd_(std::move(sdd)), factory_(std::move(factory)), origin_(origin), overrides_(overrides) {
  driver_ = factory_(sdd_, merge(sdd_.driver_params, overrides_));
}

std::unique_ptr<SensorWrapper> SensorWrapper::instantiate(WrapperOrigin origin,
                                                          const ParamMap& overrides) const {
  return std::make_unique<SensorWrapper>(sdd_, factory_, origin, merge(overrides_, overrides));
}

Reading SensorWrapper::pull(const Clock& clock) {
  std::int64_t t = clock.now_ms();
  if (last_timestamp_ && t < *last_timestamp_) t = *last_timestamp_;
  auto raw = driver_->read(t);
  Reading r;
  r.timestamp_ms = t;
  for (const auto& attr : sdd_.provided_attributes) {
    auto it = raw.find(attr.name);
    r.values[attr.name] = it == raw.end() ? Value::unknown() : it->second;
  }
  last_timestamp_ = t;
  return r;
}

std::unique_ptr<SensorWrapper> generate_wrapper(const SensorDeviceDefinition& sdd,
                                                const DriverCatalog& catalog) {
  const DriverFactory* factory = catalog.find(sdd.driver_kind);
  if (!factory) {
    throw Error(ErrorCode::unsupported_driver,
                "model '" + sdd.model_id + "': driver kind '" + sdd.driver_kind + "'");
  }
  return std::make_unique<SensorWrapper>(sdd, *factory, WrapperOrigin::generated_from_sdd);
}

Reading pull_reading(SensorWrapper& wrapper, const Clock& clock) { return wrapper.pull(clock); }

SddRepository::SddRepository(std::vector<std::filesystem::path> directories)
    : directories_(std::move(directories)) {}

void SddRepository::add(SensorDeviceDefinition sdd) {
  std::unique_lock lock(mutex_);
  cache_[sdd.model_id] = std::move(sdd);
}

std::size_t SddRepository::preload() {
  if (directories_.empty()) return 0;
  const auto& dir = directories_.front();
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::config_error, "sdd directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::size_t n = 0;
  for (const auto& f : files) {
    auto sdd = load_sdd_file(f);
    if (sdd.model_id != f.stem().string()) {
      throw Error(ErrorCode::invalid_sdd, f.string() + ": model_id '" + sdd.model_id +
                                              "' does not match file name");
    }
    add(std::move(sdd));
    ++n;
  }
  return n;
}

std::optional<SensorDeviceDefinition> SddRepository::find(std::string_view model_id) const {
  lookups_.fetch_add(1);
  {
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(model_id); it != cache_.end()) return it->second;
  }
  for (const auto& dir : directories_) {
    auto path = dir / (std::string(model_id) + ".json");
    if (!std::filesystem::is_regular_file(path)) continue;
    auto sdd = load_sdd_file(path);
    if (sdd.model_id != model_id) {
      throw Error(ErrorCode::invalid_sdd, path.string() + ": model_id '" + sdd.model_id +
                                              "' does not match file name");
    }
    std::unique_lock lock(mutex_);
    cache_[sdd.model_id] = sdd;
    return sdd;
  }
  return std::nullopt;
}

std::vector<std::string> SddRepository::model_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, sdd] : cache_) out.push_back(id);
  return out;
}

std::shared_ptr<const SensorWrapper> WrapperRepository::find(std::string_view model_id) const {
  std::shared_lock lock(mutex_);
  auto it = wrappers_.find(model_id);
  return it == wrappers_.end() ? nullptr : it->second;
}

std::shared_ptr<const SensorWrapper> WrapperRepository::insert(std::shared_ptr<const SensorWrapper> wrapper) {
  std::unique_lock lock(mutex_);
  auto [it, inserted] = wrappers_.try_emplace(wrapper->model_id(), wrapper);
  return it->second;
}

std::size_t WrapperRepository::size() const {
  std::shared_lock lock(mutex_);
  return wrappers_.size();
}

std::unique_ptr<SensorWrapper> resolve_wrapper(std::string_view model_id, WrapperRepository& wrappers,
                                               const SddRepository& sdds, const ParamMap& overrides,
                                               const DriverCatalog& catalog) {
  if (auto cached = wrappers.find(model_id)) {
    wrappers.hits_.fetch_add(1);
    return cached->instantiate(WrapperOrigin::repository_cached, overrides);
  }
  auto sdd = sdds.find(model_id);
  if (!sdd) {
    throw Error(ErrorCode::wrapper_unavailable, "no wrapper or SDD for model '" + std::string(model_id) + "'");
  }
  std::shared_ptr<const SensorWrapper> generated = generate_wrapper(*sdd, catalog);
  wrappers.generations_.fetch_add(1);
  auto stored = wrappers.insert(generated);
  return stored->instantiate(WrapperOrigin::generated_from_sdd, overrides);
}

}  // namespace senseflow
