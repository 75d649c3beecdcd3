// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace senseflow {

/// Kinds of values an attribute can carry. `any` is only used in operator
/// signatures and matches every concrete kind.
enum class ValueKind { number, boolean, string, geo, any };

std::string_view to_string(ValueKind kind);
std::optional<ValueKind> parse_value_kind(std::string_view text);

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Distinguished value produced when a reading is missing or a derivation
/// cannot be decided.
struct Unknown {
  friend bool operator==(const Unknown&, const Unknown&) = default;
};

/// Tagged scalar flowing through pipelines.
class Value {
 public:
  using Storage = std::variant<Unknown, double, bool, std::string, GeoPoint>;

  Value() = default;
  Value(double v) : data_(v) {}
  Value(int v) : data_(static_cast<double>(v)) {}
  Value(std::int64_t v) : data_(static_cast<double>(v)) {}
  Value(bool v) : data_(v) {}
  Value(std::string v) : data_(std::move(v)) {}
  Value(const char* v) : data_(std::string(v)) {}
  Value(GeoPoint v) : data_(v) {}

  static Value unknown() { return Value{}; }

  bool is_unknown() const { return std::holds_alternative<Unknown>(data_); }
  bool is_number() const { return std::holds_alternative<double>(data_); }
  bool is_boolean() const { return std::holds_alternative<bool>(data_); }
  bool is_string() const { return std::holds_alternative<std::string>(data_); }
  bool is_geo() const { return std::holds_alternative<GeoPoint>(data_); }

  /// Kind of a definite value; nullopt for unknown.
  std::optional<ValueKind> kind() const;

  double as_number() const { return std::get<double>(data_); }
  bool as_boolean() const { return std::get<bool>(data_); }
  const std::string& as_string() const { return std::get<std::string>(data_); }
  const GeoPoint& as_geo() const { return std::get<GeoPoint>(data_); }

  const Storage& storage() const { return data_; }

  friend bool operator==(const Value&, const Value&) = default;

 private:
  Storage data_;
};

/// Human-readable rendering used in diagnostics and plan dumps.
std::string to_display(const Value& value);

/// Locale-independent shortest round-trip rendering of a double.
std::string format_number(double value);

/// Parse `text` as a value of `kind`. Empty text yields unknown.
std::optional<Value> parse_value(std::string_view text, ValueKind kind);

struct TimedValue {
  std::int64_t timestamp_ms = 0;
  Value value;

  friend bool operator==(const TimedValue&, const TimedValue&) = default;
};

}  // namespace senseflow
