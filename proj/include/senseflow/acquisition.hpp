// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "senseflow/attribute.hpp"
#include "senseflow/clock.hpp"
#include "senseflow/value.hpp"

namespace senseflow {

using ParamMap = std::map<std::string, Value, std::less<>>;

/// Declarative description of a sensor model.
struct SensorDeviceDefinition {
  std::string model_id;
  std::vector<ContextAttribute> provided_attributes;
  std::int64_t sampling_interval_ms = 1000;
  /// Raw driver kind as written in the document; resolved when a wrapper is
  /// generated so that unknown kinds surface as UnsupportedDriver there.
  std::string driver_kind;
  ParamMap driver_params;
  /// Directory the definition was loaded from; relative trace paths resolve
  /// against it.
  std::filesystem::path base_directory;

  const ContextAttribute* find_attribute(std::string_view name) const;
};

enum class SddFormat { json };

/// Throws Error{malformed_sdd} on syntax errors and Error{invalid_sdd} on
/// invariant violations (the message names the field).
SensorDeviceDefinition load_sdd(std::string_view document, SddFormat format = SddFormat::json,
                                const std::filesystem::path& base_directory = {});
SensorDeviceDefinition load_sdd_file(const std::filesystem::path& path);

/// One timestamped bundle of attribute values pulled from a sensor.
struct Reading {
  std::int64_t timestamp_ms = 0;
  std::map<std::string, Value, std::less<>> values;
};

/// Source of raw values behind a wrapper. `read` throws Error{sensor_fault}
/// when the underlying device cannot produce a reading.
class SensorDriver {
 public:
  virtual ~SensorDriver() = default;
  virtual std::map<std::string, Value, std::less<>> read(std::int64_t now_ms) = 0;
};

using DriverFactory =
    std::function<std::unique_ptr<SensorDriver>(const SensorDeviceDefinition&, const ParamMap&)>;

/// Maps driver kinds to factories. The built-in catalog knows
/// simulated-function, simulated-trace, and external-stub.
class DriverCatalog {
 public:
  static const DriverCatalog& builtin();
  static DriverCatalog with_builtins();

  void add(std::string kind, DriverFactory factory);
  const DriverFactory* find(std::string_view kind) const;

 private:
  std::map<std::string, DriverFactory, std::less<>> factories_;
};

enum class WrapperOrigin { repository_cached, generated_from_sdd };

std::string_view to_string(WrapperOrigin origin);

/// Adapter that pulls readings from one sensor model.
///
/// A wrapper is stateful (trace position, noise generator, last timestamp)
/// and is pulled by a single consumer. `instantiate` produces a fresh
/// instance with per-sensor parameter overrides.
class SensorWrapper {
 public:
  SensorWrapper(SensorDeviceDefinition sdd, DriverFactory factory, WrapperOrigin origin,
                const ParamMap& overrides = {});

  const std::string& model_id() const { return sdd_.model_id; }
  const SensorDeviceDefinition& definition() const { return sdd_; }
  WrapperOrigin origin() const { return origin_; }

  std::unique_ptr<SensorWrapper> instantiate(WrapperOrigin origin, const ParamMap& overrides = {}) const;

  /// Emits every declared attribute; timestamps never decrease.
  Reading pull(const Clock& clock);

 private:
  SensorDeviceDefinition sdd_;
  DriverFactory factory_;
  WrapperOrigin origin_;
  ParamMap overrides_;
  std::unique_ptr<SensorDriver> driver_;
  std::optional<std::int64_t> last_timestamp_;
};

/// Throws Error{unsupported_driver}.
std::unique_ptr<SensorWrapper> generate_wrapper(const SensorDeviceDefinition& sdd,
                                                const DriverCatalog& catalog = DriverCatalog::builtin());

/// Free-function form of SensorWrapper::pull.
Reading pull_reading(SensorWrapper& wrapper, const Clock& clock);

/// Sensor device definitions by model id: an in-memory tier backed by an
/// ordered list of directories (local first, then the remote stand-in).
class SddRepository {
 public:
  explicit SddRepository(std::vector<std::filesystem::path> directories = {});
  SddRepository(const SddRepository&) = delete;
  SddRepository& operator=(const SddRepository&) = delete;

  void add(SensorDeviceDefinition sdd);
  /// Load and validate every definition in the first directory tier.
  std::size_t preload();

  std::optional<SensorDeviceDefinition> find(std::string_view model_id) const;
  std::vector<std::string> model_ids() const;
  std::size_t lookups() const { return lookups_.load(); }

 private:
  std::vector<std::filesystem::path> directories_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::string, SensorDeviceDefinition, std::less<>> cache_;
  mutable std::atomic<std::size_t> lookups_{0};
};

/// Cache of generated wrappers by model id.
class WrapperRepository {
 public:
  WrapperRepository() = default;
  WrapperRepository(const WrapperRepository&) = delete;
  WrapperRepository& operator=(const WrapperRepository&) = delete;

  std::shared_ptr<const SensorWrapper> find(std::string_view model_id) const;
  /// Inserts unless present; returns the cached entry either way.
  std::shared_ptr<const SensorWrapper> insert(std::shared_ptr<const SensorWrapper> wrapper);

  std::size_t size() const;
  std::size_t generations() const { return generations_.load(); }
  std::size_t hits() const { return hits_.load(); }

 private:
  friend std::unique_ptr<SensorWrapper> resolve_wrapper(std::string_view, WrapperRepository&,
                                                        const SddRepository&, const ParamMap&,
                                                        const DriverCatalog&);
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const SensorWrapper>, std::less<>> wrappers_;
  std::atomic<std::size_t> generations_{0};
  std::atomic<std::size_t> hits_{0};
};

/// Wrapper repository first, then SDD repository plus generation; a newly
/// generated wrapper is cached before returning. The result is a fresh
/// instance carrying `overrides`. Throws Error{wrapper_unavailable}.
std::unique_ptr<SensorWrapper> resolve_wrapper(std::string_view model_id, WrapperRepository& wrappers,
                                               const SddRepository& sdds, const ParamMap& overrides = {},
                                               const DriverCatalog& catalog = DriverCatalog::builtin());

}  // namespace senseflow
