// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "senseflow/value.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "senseflow/error.hpp"

namespace senseflow {

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::number: return "number";
    case ValueKind::boolean: return "boolean";
    case ValueKind::string: return "string";
    case ValueKind::geo: return "geo";
    case ValueKind::any: return "any";
  }
  return "?";
}

std::optional<ValueKind> parse_value_kind(std::string_view text) {
  if (text == "number") return ValueKind::number;
  if (text == "boolean" || text == "bool") return ValueKind::boolean;
  if (text == "string") return ValueKind::string;
  if (text == "geo") return ValueKind::geo;
  if (text == "any") return ValueKind::any;
  return std::nullopt;
}

std::optional<ValueKind> Value::kind() const {
  switch (data_.index()) {
    case 1: return ValueKind::number;
    case 2: return ValueKind::boolean;
    case 3: return ValueKind::string;
    case 4: return ValueKind::geo;
    default: return std::nullopt;
  }
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

std::string to_display(const Value& value) {
  struct Visitor {
    std::string operator()(const Unknown&) const { return "unknown"; }
    std::string operator()(double v) const { return format_number(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const { return v; }
    std::string operator()(const GeoPoint& g) const {
      return format_number(g.latitude) + "," + format_number(g.longitude);
    }
  };
  return std::visit(Visitor{}, value.storage());
}

namespace {

std::optional<double> parse_double(std::string_view text) {
  double out = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<Value> parse_value(std::string_view text, ValueKind kind) {
  text = trim(text);
  if (text.empty()) return Value::unknown();
  switch (kind) {
    case ValueKind::number: {
      auto d = parse_double(text);
      if (!d) return std::nullopt;
      return Value(*d);
    }
    case ValueKind::boolean:
      if (text == "true" || text == "1") return Value(true);
      if (text == "false" || text == "0") return Value(false);
      return std::nullopt;
    case ValueKind::string:
      return Value(std::string(text));
    case ValueKind::geo: {
      auto sep = text.find_first_of(",; ");
      if (sep == std::string_view::npos) return std::nullopt;
      auto lat = parse_double(trim(text.substr(0, sep)));
      auto lon = parse_double(trim(text.substr(sep + 1)));
      if (!lat || !lon) return std::nullopt;
      return Value(GeoPoint{*lat, *lon});
    }
    case ValueKind::any: {
      if (auto d = parse_double(text)) return Value(*d);
      if (text == "true") return Value(true);
      if (text == "false") return Value(false);
      return Value(std::string(text));
    }
  }
  return std::nullopt;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::malformed_sdd: return "MalformedSdd";
    case ErrorCode::invalid_sdd: return "InvalidSdd";
    case ErrorCode::unsupported_driver: return "UnsupportedDriver";
    case ErrorCode::wrapper_unavailable: return "WrapperUnavailable";
    case ErrorCode::sensor_fault: return "SensorFault";
    case ErrorCode::invalid_descriptor: return "InvalidDescriptor";
    case ErrorCode::duplicate_sensor_id: return "DuplicateSensorId";
    case ErrorCode::unknown_provider: return "UnknownProvider";
    case ErrorCode::malformed_domain: return "MalformedDomain";
    case ErrorCode::cyclic_dependency: return "CyclicDependency";
    case ErrorCode::unknown_attribute: return "UnknownAttribute";
    case ErrorCode::duplicate_operator_id: return "DuplicateOperatorId";
    case ErrorCode::signature_mismatch: return "SignatureMismatch";
    case ErrorCode::no_operator_found: return "NoOperatorFound";
    case ErrorCode::arity_mismatch: return "ArityMismatch";
    case ErrorCode::kind_mismatch: return "KindMismatch";
    case ErrorCode::unsatisfiable_attribute: return "UnsatisfiableAttribute";
    case ErrorCode::state_violation: return "StateViolation";
    case ErrorCode::schema_violation: return "SchemaViolation";
    case ErrorCode::unsupported_format: return "UnsupportedFormat";
    case ErrorCode::invalid_interval: return "InvalidInterval";
    case ErrorCode::sink_unavailable: return "SinkUnavailable";
    case ErrorCode::unknown_subscription: return "UnknownSubscription";
    case ErrorCode::config_error: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace senseflow
